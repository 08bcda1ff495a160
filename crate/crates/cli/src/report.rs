//! Machine-readable run reports.
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same `f64`, so a report read back yields bit-identical values.

use std::collections::BTreeMap;
use std::io::Write;

use kscore_core::estimators::Flag;
use kscore_core::simulate::SimulationResult;
use kscore_core::KernelSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub format: String,
    pub groups: usize,
}

/// Results for one group (instance) of the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResult {
    pub group_id: String,
    /// Number of side-x clusters.
    pub n: usize,
    pub cluster_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub y_cluster_sizes: Vec<usize>,
    pub target_size: usize,
    /// Kernel with every defaulted parameter filled in for this group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    /// Named outputs; `None` marks a term that could not be estimated.
    pub values: BTreeMap<String, Option<f64>>,
    #[serde(default)]
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Summary {
            count,
            mean,
            sd,
            min,
            max,
        })
    }
}

/// Per-value statistics across successful groups.
pub fn aggregate(groups: &[GroupResult]) -> BTreeMap<String, Summary> {
    let mut columns: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for g in groups {
        for (k, v) in &g.values {
            if let Some(v) = v {
                columns.entry(k).or_default().push(*v);
            }
        }
    }
    columns
        .into_iter()
        .filter_map(|(k, vs)| Summary::of(&vs).map(|s| (k.to_string(), s)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub auroc: f64,
    /// Pearson correlation of uncertainty with loss, when it is defined.
    pub pearson: Option<f64>,
    pub orientation: kscore_core::evaluate::Orientation,
    pub uncertainty_source: String,
    pub threshold: f64,
    pub correct: usize,
    pub incorrect: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupError {
    pub group_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Seconds since the Unix epoch; omitted with `--no-timestamp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub seed: Option<u64>,
    pub input: InputInfo,
    /// Kernel as requested; per-group entries carry the resolved parameters.
    pub kernel: Option<KernelSpec>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub groups: Vec<GroupResult>,
    pub aggregate: BTreeMap<String, Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
    pub errors: Vec<GroupError>,
}

impl Report {
    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Report> {
        serde_json::from_str(s)
    }

    /// Writes a flat table: one row per grid point for simulations, one row
    /// per group otherwise.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if let Some(sim) = &self.simulation {
            w.write_record([
                "n",
                "m",
                "mean",
                "sd",
                "variance",
                "standard_error",
                "exact",
                "bias",
                "below_recommended",
            ])?;
            for p in &sim.points {
                w.write_record([
                    p.n.to_string(),
                    p.m.to_string(),
                    p.mean.to_string(),
                    p.sd.to_string(),
                    p.variance.to_string(),
                    p.standard_error.to_string(),
                    p.exact.to_string(),
                    p.bias.to_string(),
                    p.below_recommended.to_string(),
                ])?;
            }
            return w.flush().map_err(Into::into);
        }

        let mut keys: Vec<&str> = self
            .groups
            .iter()
            .flat_map(|g| g.values.keys().map(String::as_str))
            .collect();
        keys.sort_unstable();
        keys.dedup();

        let mut header = vec!["group_id", "n", "cluster_sizes", "target_size"];
        header.extend(&keys);
        header.push("flags");
        w.write_record(&header)?;
        for g in &self.groups {
            let mut row = vec![
                g.group_id.clone(),
                g.n.to_string(),
                join(g.cluster_sizes.iter()),
                g.target_size.to_string(),
            ];
            for k in &keys {
                row.push(match g.values.get(*k) {
                    Some(Some(v)) => v.to_string(),
                    _ => String::new(),
                });
            }
            row.push(join(g.flags.iter().map(flag_name)));
            w.write_record(&row)?;
        }
        w.flush().map_err(Into::into)
    }
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join("|")
}

fn flag_name(flag: &Flag) -> String {
    serde_json::to_value(flag)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}
