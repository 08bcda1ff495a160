//! Source files describing a finite mixture (or joint mixture) for `simulate`.
//!
//! ```json
//! {"components": [{"atoms": [[0.0, 1.0], [1.0, 0.0]], "weights": [0.5, 0.5]}],
//!  "probs": [1.0]}
//! {"pairs": [{"p": {"atoms": ["a b", "b a"], "weights": [0.5, 0.5]},
//!             "q": {"atoms": [["a", "b"]], "weights": [1.0]}}],
//!  "probs": [1.0]}
//! ```
//!
//! An atom is a number array (embedding), a string array (tokens) or a string
//! (text, tokenized like input rows).

use kscore_core::simulate::Source;
use kscore_core::{DiscreteDistribution, DiscreteMixture, JointDiscreteMixture, Point};
use serde::Deserialize;

use crate::ingest::{tokenize, Vocabulary};

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AtomSpec {
    Text(String),
    Tokens(Vec<String>),
    Dense(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionSpec {
    atoms: Vec<AtomSpec>,
    weights: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairSpec {
    p: DistributionSpec,
    q: DistributionSpec,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SourceSpec {
    Mixture {
        components: Vec<DistributionSpec>,
        probs: Vec<f64>,
    },
    Joint {
        pairs: Vec<PairSpec>,
        probs: Vec<f64>,
    },
}

#[derive(Debug, thiserror::Error)]
#[error("invalid source file: {0}")]
pub struct SourceError(pub String);

fn atom(spec: AtomSpec, vocab: &mut Vocabulary) -> Result<Point, SourceError> {
    Ok(match spec {
        AtomSpec::Text(t) => Point::Tokens(tokenize(&t).iter().map(|w| vocab.intern(w)).collect()),
        AtomSpec::Tokens(ts) => Point::Tokens(ts.iter().map(|w| vocab.intern(w)).collect()),
        AtomSpec::Dense(v) => Point::dense(v).map_err(|e| SourceError(e.to_string()))?,
    })
}

fn distribution(
    spec: DistributionSpec,
    vocab: &mut Vocabulary,
) -> Result<DiscreteDistribution, SourceError> {
    let atoms = spec
        .atoms
        .into_iter()
        .map(|a| atom(a, vocab))
        .collect::<Result<Vec<_>, _>>()?;
    DiscreteDistribution::new(atoms, spec.weights).map_err(|e| SourceError(e.to_string()))
}

pub fn parse_source(json: &str) -> Result<Source, SourceError> {
    let spec: SourceSpec = serde_json::from_str(json).map_err(|e| SourceError(e.to_string()))?;
    let mut vocab = Vocabulary::default();
    match spec {
        SourceSpec::Mixture { components, probs } => {
            let components = components
                .into_iter()
                .map(|c| distribution(c, &mut vocab))
                .collect::<Result<Vec<_>, _>>()?;
            DiscreteMixture::new(components, probs)
                .map(Source::Mixture)
                .map_err(|e| SourceError(e.to_string()))
        }
        SourceSpec::Joint { pairs, probs } => {
            let pairs = pairs
                .into_iter()
                .map(|p| Ok((distribution(p.p, &mut vocab)?, distribution(p.q, &mut vocab)?)))
                .collect::<Result<Vec<_>, SourceError>>()?;
            JointDiscreteMixture::new(pairs, probs)
                .map(Source::Joint)
                .map_err(|e| SourceError(e.to_string()))
        }
    }
}
