//! Reading grouped generations from JSONL or CSV.
//!
//! One row per generation (or target, or pre-computed score). Rows with the
//! same `group_id` form one instance; inside an instance rows with the same
//! `cluster_id` form one cluster. Groups and clusters are ordered by first
//! appearance, and row order inside a cluster is preserved, so interleaving
//! rows of different groups does not change the result.
//!
//! Content is one of `payload` (embedding), `tokens` (taken verbatim) or
//! `text` (lowercased and split on whitespace). Token strings are interned to
//! ids in first-appearance order over the whole file.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use kscore_core::{Point, PointKind, TokenId};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("group {group}: rows mix {left} and {right} content")]
    MixedKinds {
        group: String,
        left: PointKind,
        right: PointKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Generation,
    Target,
}

/// Which half of a paired block a generation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    X,
    Y,
}

/// One input row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestRecord {
    pub group_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    /// Binary correctness of the instance's answer (1 = correct).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<f64>,
    /// Continuous loss of the instance's answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    /// Pre-computed uncertainty of the instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<f64>,
}

/// Lowercase and split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    ids: HashMap<String, TokenId>,
    words: Vec<String>,
}

impl Vocabulary {
    pub fn intern(&mut self, word: &str) -> TokenId {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as TokenId;
        self.ids.insert(word.to_owned(), id);
        self.words.push(word.to_owned());
        id
    }

    pub fn word(&self, id: TokenId) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: Option<String>,
    pub points: Vec<Point>,
}

/// All rows sharing one `group_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub id: String,
    /// Generation clusters of side `x` (the default side).
    pub clusters: Vec<Cluster>,
    /// Generation clusters of side `y`, for paired blocks.
    pub y_clusters: Vec<Cluster>,
    pub targets: Vec<Point>,
    pub uncertainty: Option<f64>,
    pub label: Option<u8>,
    pub loss: Option<f64>,
    pub kind: Option<PointKind>,
}

impl Group {
    fn new(id: String) -> Self {
        Group {
            id,
            clusters: Vec::new(),
            y_clusters: Vec::new(),
            targets: Vec::new(),
            uncertainty: None,
            label: None,
            loss: None,
            kind: None,
        }
    }

    /// All side-`x` generations in cluster order.
    pub fn generations(&self) -> Vec<Point> {
        self.clusters
            .iter()
            .flat_map(|c| c.points.iter().cloned())
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.points.len()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub groups: Vec<Group>,
    pub vocabulary: Vocabulary,
}

fn schema(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Schema {
        line,
        message: message.into(),
    }
}

fn push_cluster(clusters: &mut Vec<Cluster>, id: Option<String>, point: Point) {
    match clusters.iter_mut().find(|c| c.id == id) {
        Some(c) => c.points.push(point),
        None => clusters.push(Cluster {
            id,
            points: vec![point],
        }),
    }
}

#[derive(Default)]
struct Builder {
    dataset: Dataset,
    index: HashMap<String, usize>,
}

impl Builder {
    fn add(&mut self, line: usize, record: IngestRecord) -> Result<(), IngestError> {
        if record.group_id.is_empty() {
            return Err(schema(line, "group_id is empty"));
        }
        if record.cluster_id.as_deref() == Some("") {
            return Err(schema(line, "cluster_id is empty"));
        }
        let contents = [
            record.payload.is_some(),
            record.tokens.is_some(),
            record.text.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if contents > 1 {
            return Err(schema(line, "more than one of payload, tokens, text"));
        }
        let scored = record.uncertainty.is_some() || record.label.is_some() || record.loss.is_some();
        if contents == 0 && !scored {
            return Err(schema(line, "missing payload, tokens or text"));
        }

        let point = if let Some(payload) = record.payload {
            if payload.is_empty() {
                return Err(schema(line, "payload is empty"));
            }
            Some(Point::dense(payload).map_err(|e| schema(line, e.to_string()))?)
        } else if let Some(tokens) = record.tokens {
            let ids = tokens.iter().map(|t| self.dataset.vocabulary.intern(t)).collect();
            Some(Point::Tokens(ids))
        } else if let Some(text) = record.text {
            let ids = tokenize(&text)
                .iter()
                .map(|t| self.dataset.vocabulary.intern(t))
                .collect();
            Some(Point::Tokens(ids))
        } else {
            None
        };

        let label = match record.label {
            None => None,
            Some(0.0) => Some(0),
            Some(1.0) => Some(1),
            Some(v) => return Err(schema(line, format!("label must be 0 or 1, got {v}"))),
        };
        for (name, v) in [("uncertainty", record.uncertainty), ("loss", record.loss)] {
            if v.is_some_and(|v| !v.is_finite()) {
                return Err(schema(line, format!("{name} is not finite")));
            }
        }

        let next = self.dataset.groups.len();
        let idx = *self.index.entry(record.group_id.clone()).or_insert(next);
        if idx == next {
            self.dataset.groups.push(Group::new(record.group_id.clone()));
        }
        let group = &mut self.dataset.groups[idx];

        for (slot, value, name) in [
            (&mut group.uncertainty, record.uncertainty, "uncertainty"),
            (&mut group.loss, record.loss, "loss"),
        ] {
            if let Some(v) = value {
                if slot.is_some_and(|old| old != v) {
                    return Err(schema(line, format!("conflicting {name} for group {}", group.id)));
                }
                *slot = Some(v);
            }
        }
        if let Some(l) = label {
            if group.label.is_some_and(|old| old != l) {
                return Err(schema(line, format!("conflicting label for group {}", group.id)));
            }
            group.label = Some(l);
        }

        if let Some(point) = point {
            match group.kind {
                Some(kind) if kind != point.kind() => {
                    return Err(IngestError::MixedKinds {
                        group: group.id.clone(),
                        left: kind,
                        right: point.kind(),
                    })
                }
                _ => group.kind = Some(point.kind()),
            }
            match (record.role.unwrap_or_default(), record.side.unwrap_or_default()) {
                (Role::Target, _) => group.targets.push(point),
                (Role::Generation, Side::X) => push_cluster(&mut group.clusters, record.cluster_id, point),
                (Role::Generation, Side::Y) => {
                    push_cluster(&mut group.y_clusters, record.cluster_id, point)
                }
            }
        }
        Ok(())
    }
}

/// Parses JSONL from a reader. Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Dataset, IngestError> {
    let mut builder = Builder::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| schema(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: IngestRecord =
            serde_json::from_str(&line).map_err(|e| schema(line_no, e.to_string()))?;
        builder.add(line_no, record)?;
    }
    Ok(builder.dataset)
}

const CSV_COLUMNS: [&str; 10] = [
    "group_id",
    "cluster_id",
    "role",
    "side",
    "payload",
    "tokens",
    "text",
    "label",
    "loss",
    "uncertainty",
];

/// Parses CSV with a header row. `payload` and `tokens` are `|`-delimited;
/// empty cells are absent values.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| schema(1, e.to_string()))?.clone();
    for h in headers.iter() {
        if !CSV_COLUMNS.contains(&h) {
            return Err(schema(1, format!("unknown column {h:?}")));
        }
    }
    if !headers.iter().any(|h| h == "group_id") {
        return Err(schema(1, "missing group_id column"));
    }
    let mut builder = Builder::default();
    for result in rdr.records() {
        let row = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            schema(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let cell = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .and_then(|i| row.get(i))
                .filter(|s| !s.is_empty())
        };
        let number = |name: &str| -> Result<Option<f64>, IngestError> {
            cell(name)
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| schema(line, format!("{name}: not a number: {s:?}")))
                })
                .transpose()
        };
        let enum_cell = |name: &str| -> Result<Option<String>, IngestError> {
            Ok(cell(name).map(|s| format!("\"{}\"", s.trim())))
        };
        let role = enum_cell("role")?
            .map(|s| serde_json::from_str::<Role>(&s).map_err(|_| schema(line, format!("bad role {s}"))))
            .transpose()?;
        let side = enum_cell("side")?
            .map(|s| serde_json::from_str::<Side>(&s).map_err(|_| schema(line, format!("bad side {s}"))))
            .transpose()?;
        let payload = cell("payload")
            .map(|s| {
                s.split('|')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| schema(line, format!("payload: not a number: {v:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        let record = IngestRecord {
            group_id: cell("group_id").unwrap_or_default().to_owned(),
            cluster_id: cell("cluster_id").map(str::to_owned),
            payload,
            tokens: cell("tokens").map(|s| s.split('|').map(str::to_owned).collect()),
            text: cell("text").map(str::to_owned),
            role,
            side,
            label: number("label")?,
            loss: number("loss")?,
            uncertainty: number("uncertainty")?,
        };
        builder.add(line, record)?;
    }
    Ok(builder.dataset)
}

pub fn ingest(path: &Path, format: InputFormat) -> Result<Dataset, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        InputFormat::Jsonl => read_jsonl(BufReader::new(file)),
        InputFormat::Csv => read_csv(BufReader::new(file)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jsonl(lines: &[&str]) -> Result<Dataset, IngestError> {
        read_jsonl(lines.join("\n").as_bytes())
    }

    #[test]
    fn groups_without_clusters() {
        let mut rows = Vec::new();
        for g in ["q1", "q2"] {
            for i in 0..3 {
                rows.push(format!(r#"{{"group_id":"{g}","payload":[{i}.0, 1.0]}}"#));
            }
        }
        let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
        let ds = jsonl(&rows).unwrap();
        assert_eq!(ds.groups.len(), 2);
        for g in &ds.groups {
            assert_eq!(g.cluster_sizes(), vec![3]);
        }
    }

    #[test]
    fn cluster_ids_form_clusters() {
        let ds = jsonl(&[
            r#"{"group_id":"q","cluster_id":"m1","tokens":["a"]}"#,
            r#"{"group_id":"q","cluster_id":"m2","tokens":["b"]}"#,
            r#"{"group_id":"q","cluster_id":"m1","tokens":["c"]}"#,
            r#"{"group_id":"q","cluster_id":"m2","tokens":["d"]}"#,
        ])
        .unwrap();
        let g = &ds.groups[0];
        assert_eq!(g.cluster_sizes(), vec![2, 2]);
        assert_eq!(g.clusters[0].points, vec![Point::Tokens(vec![0]), Point::Tokens(vec![2])]);
    }

    #[test]
    fn schema_error_cites_line() {
        let mut rows = vec![r#"{"group_id":"q","payload":[1.0]}"#; 16];
        rows.push(r#"{"group_id":"q"}"#);
        match jsonl(&rows).unwrap_err() {
            IngestError::Schema { line, .. } => assert_eq!(line, 17),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(jsonl(&[r#"{"group_id":"q","payload":[1.0],"colour":"red"}"#]).is_err());
    }

    #[test]
    fn mixed_kinds_in_group() {
        let err = jsonl(&[
            r#"{"group_id":"q","payload":[1.0]}"#,
            r#"{"group_id":"q","tokens":["a"]}"#,
        ])
        .unwrap_err();
        assert!(matches!(err, IngestError::MixedKinds { .. }));
    }

    #[test]
    fn text_is_normalized() {
        let ds = jsonl(&[
            r#"{"group_id":"q","text":"The  Cat sat"}"#,
            r#"{"group_id":"q","tokens":["the","cat","sat"]}"#,
        ])
        .unwrap();
        let g = &ds.groups[0];
        assert_eq!(g.clusters[0].points[0], g.clusters[0].points[1]);
        assert_eq!(ds.vocabulary.word(1), Some("cat"));
    }

    #[test]
    fn roles_and_scores() {
        let ds = jsonl(&[
            r#"{"group_id":"q","tokens":["a"],"role":"target"}"#,
            r#"{"group_id":"q","tokens":["a"],"side":"y"}"#,
            r#"{"group_id":"q","uncertainty":0.5,"label":1}"#,
        ])
        .unwrap();
        let g = &ds.groups[0];
        assert_eq!(g.targets.len(), 1);
        assert_eq!(g.y_clusters.len(), 1);
        assert!(g.clusters.is_empty());
        assert_eq!((g.uncertainty, g.label), (Some(0.5), Some(1)));
        assert!(jsonl(&[r#"{"group_id":"q","label":2}"#]).is_err());
    }

    #[test]
    fn interleaving_does_not_change_groups() {
        let contiguous = jsonl(&[
            r#"{"group_id":"a","tokens":["x"]}"#,
            r#"{"group_id":"a","tokens":["y"]}"#,
            r#"{"group_id":"b","tokens":["z"]}"#,
            r#"{"group_id":"b","tokens":["w"]}"#,
        ])
        .unwrap();
        let interleaved = jsonl(&[
            r#"{"group_id":"a","tokens":["x"]}"#,
            r#"{"group_id":"b","tokens":["z"]}"#,
            r#"{"group_id":"a","tokens":["y"]}"#,
            r#"{"group_id":"b","tokens":["w"]}"#,
        ])
        .unwrap();
        let words = |ds: &Dataset| -> Vec<Vec<String>> {
            ds.groups
                .iter()
                .map(|g| {
                    g.generations()
                        .iter()
                        .map(|p| match p {
                            Point::Tokens(t) => ds.vocabulary.word(t[0]).unwrap().to_owned(),
                            Point::Dense(_) => unreachable!(),
                        })
                        .collect()
                })
                .collect()
        };
        assert_eq!(words(&contiguous), words(&interleaved));
        assert_eq!(
            contiguous.groups.iter().map(|g| &g.id).collect::<Vec<_>>(),
            interleaved.groups.iter().map(|g| &g.id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn csv_rows() {
        let data = "group_id,cluster_id,payload,tokens,role\n\
                    q,m1,0.5|1.5,,\n\
                    q,m2,1|2,,\n\
                    q,,3|4,,target\n";
        let ds = read_csv(data.as_bytes()).unwrap();
        let g = &ds.groups[0];
        assert_eq!(g.cluster_sizes(), vec![1, 1]);
        assert_eq!(g.clusters[0].points[0], Point::Dense(vec![0.5, 1.5]));
        assert_eq!(g.targets, vec![Point::Dense(vec![3.0, 4.0])]);
    }

    #[test]
    fn csv_tokens_and_errors() {
        let ds = read_csv("group_id,tokens\nq,a|b\nq,b|a\n".as_bytes()).unwrap();
        assert_eq!(ds.groups[0].generations()[1], Point::Tokens(vec![1, 0]));

        match read_csv("group_id,payload\nq,1|x\n".as_bytes()).unwrap_err() {
            IngestError::Schema { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        assert!(read_csv("group_id,bogus\nq,1\n".as_bytes()).is_err());
    }
}
