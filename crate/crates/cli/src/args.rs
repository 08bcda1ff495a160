use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kscore_core::evaluate::Orientation;
use kscore_core::simulate::EstimatorKind;
use kscore_core::{KernelKind, KernelSpec};

use crate::ingest::InputFormat;

#[derive(Debug, Parser)]
#[command(name = "kscore", version, about = "Kernel scores, kernel entropy and the bias-variance-covariance decomposition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predictive kernel entropy of each group's generations.
    Entropy(GroupArgs),
    /// Kernel score of each group's generations against its targets.
    Score(ScoreArgs),
    /// MMD² between each group's generations and its targets.
    Mmd2(ScoreArgs),
    /// Distributional variance over each group's clusters.
    Variance(GroupArgs),
    /// Distributional covariance and correlation between side-x and side-y clusters.
    Covariance(GroupArgs),
    /// Noise, bias and variance of the expected kernel score.
    Decompose(GroupArgs),
    /// Monte-Carlo characterization of an estimator on a finite mixture.
    Simulate(SimulateArgs),
    /// AUROC (and Pearson correlation) of per-group uncertainty against correctness.
    Auroc(AurocArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Entropy(_) => "entropy",
            Command::Score(_) => "score",
            Command::Mmd2(_) => "mmd2",
            Command::Variance(_) => "variance",
            Command::Covariance(_) => "covariance",
            Command::Decompose(_) => "decompose",
            Command::Simulate(_) => "simulate",
            Command::Auroc(_) => "auroc",
        }
    }

    pub fn io(&self) -> &IoArgs {
        match self {
            Command::Entropy(a) | Command::Variance(a) | Command::Covariance(a) | Command::Decompose(a) => {
                &a.io
            }
            Command::Score(a) | Command::Mmd2(a) => &a.group.io,
            Command::Simulate(a) => &a.io,
            Command::Auroc(a) => &a.io,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    /// Input file (rows for most commands, a mixture description for `simulate`).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: InputFormat,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub output_format: OutputFormat,
    /// List per-group failures in the report instead of aborting.
    #[arg(long)]
    pub skip_errors: bool,
    /// Leave the timestamp out so repeated runs give identical bytes
    #[arg(long)]
    pub no_timestamp: bool,
    /// RNG seed for `simulate` (default 0)
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct KernelArgs {
    /// Kernel kind, optionally with named parameters: `rbf`, `rbf:gamma=0.5`,
    /// `polynomial:degree=2,offset=0`, `cs_subsequence:t=2`.
    #[arg(long)]
    pub kernel: Option<String>,
    /// rbf/laplacian bandwidth; 1/dimension when unset
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Polynomial degree (default 3)
    #[arg(long)]
    pub degree: Option<u32>,
    /// Polynomial offset (default 1)
    #[arg(long)]
    pub offset: Option<f64>,
    /// Polynomial scale; the dimension when unset
    #[arg(long)]
    pub scale: Option<f64>,
    /// Window length of the contiguous-subsequence kernel (default 2)
    #[arg(long = "t")]
    pub t: Option<usize>,
    /// Zero-pad embeddings of different lengths instead of failing
    #[arg(long)]
    pub pad_to_max: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GroupArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    /// Include k(x, x) terms in the within-sample means.
    #[arg(long)]
    pub biased: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Variance,
    Covariance,
    Correlation,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Variance => EstimatorKind::Variance,
            EstimatorArg::Covariance => EstimatorKind::Covariance,
            EstimatorArg::Correlation => EstimatorKind::Correlation,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long, value_enum, default_value = "variance")]
    pub estimator: EstimatorArg,
    #[arg(long, default_value_t = 1000)]
    pub replications: usize,
    /// Comma-separated `n:m` pairs.
    #[arg(long, default_value = "10:10")]
    pub grid: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrientationArg {
    /// Higher scores mean the answer is more likely wrong.
    Uncertainty,
    /// Higher scores mean the answer is more likely right.
    Confidence,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::Uncertainty => Orientation::UncertaintyPredictsError,
            OrientationArg::Confidence => Orientation::ConfidencePredictsCorrectness,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UncertaintySource {
    /// The `uncertainty` field when present, kernel entropy otherwise.
    Auto,
    Field,
    KernelEntropy,
    /// Negative mean pairwise RougeL of the generations.
    Lexical,
}

#[derive(Debug, Clone, Args)]
pub struct AurocArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// RougeL threshold for deriving correctness from the first generation and target.
    #[arg(long, default_value_t = 0.3)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "uncertainty")]
    pub orientation: OrientationArg,
    #[arg(long, value_enum, default_value = "auto")]
    pub uncertainty: UncertaintySource,
}

/// Parses `--grid "n1:m1,n2:m2"`.
pub fn parse_grid(grid: &str) -> Result<Vec<(usize, usize)>, String> {
    grid.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (n, m) = pair
                .split_once(':')
                .ok_or_else(|| format!("grid entry {pair:?} is not n:m"))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("grid entry {pair:?}: {s:?} is not a size"))
            };
            Ok((parse(n)?, parse(m)?))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|g| {
            if g.is_empty() {
                Err("grid is empty".into())
            } else {
                Ok(g)
            }
        })
}

impl KernelArgs {
    pub fn is_set(&self) -> bool {
        self.kernel.is_some()
    }

    /// Builds the kernel, rejecting parameters the kind does not take.
    pub fn build(&self) -> Result<KernelSpec, String> {
        let raw = self
            .kernel
            .as_deref()
            .ok_or_else(|| "--kernel is required".to_string())?;
        let (kind, inline) = match raw.split_once(':') {
            Some((k, rest)) => (k.trim(), rest),
            None => (raw.trim(), ""),
        };

        let mut gamma = self.gamma;
        let mut degree = self.degree;
        let mut offset = self.offset;
        let mut scale = self.scale;
        let mut t = self.t;
        let mut pad = self.pad_to_max;
        for item in inline.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("kernel parameter {item:?} is not key=value"))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("kernel parameter {key}: {v:?} is not a number"))
            };
            let int = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("kernel parameter {key}: {v:?} is not an integer"))
            };
            fn set<T: PartialEq + Copy>(slot: &mut Option<T>, v: T, key: &str) -> Result<(), String> {
                match slot {
                    Some(old) if *old != v => Err(format!("kernel parameter {key} given twice")),
                    _ => {
                        *slot = Some(v);
                        Ok(())
                    }
                }
            }
            match key.trim() {
                "gamma" => set(&mut gamma, num(value)?, key)?,
                "degree" => set(&mut degree, int(value)? as u32, key)?,
                "offset" => set(&mut offset, num(value)?, key)?,
                "scale" => set(&mut scale, num(value)?, key)?,
                "t" => set(&mut t, int(value)?, key)?,
                "pad_to_max" => {
                    pad = value
                        .trim()
                        .parse::<bool>()
                        .map_err(|_| format!("pad_to_max: {value:?} is not true/false"))?
                }
                other => return Err(format!("unknown kernel parameter {other:?}")),
            }
        }

        let reject = |name: &str, present: bool| {
            if present {
                Err(format!("kernel {kind} does not take {name}"))
            } else {
                Ok(())
            }
        };
        let kind = match kind {
            "rbf" | "laplacian" => {
                reject("degree", degree.is_some())?;
                reject("offset", offset.is_some())?;
                reject("scale", scale.is_some())?;
                reject("t", t.is_some())?;
                if kind == "rbf" {
                    KernelKind::Rbf { gamma }
                } else {
                    KernelKind::Laplacian { gamma }
                }
            }
            "polynomial" => {
                reject("gamma", gamma.is_some())?;
                reject("t", t.is_some())?;
                KernelKind::Polynomial {
                    degree: degree.unwrap_or(3),
                    offset: offset.unwrap_or(1.0),
                    scale,
                }
            }
            "delta" | "linear" | "cosine" => {
                reject("gamma", gamma.is_some())?;
                reject("degree", degree.is_some())?;
                reject("offset", offset.is_some())?;
                reject("scale", scale.is_some())?;
                reject("t", t.is_some())?;
                match kind {
                    "delta" => KernelKind::Delta,
                    "linear" => KernelKind::Linear,
                    _ => KernelKind::Cosine,
                }
            }
            "cs_subsequence" | "cs" => {
                reject("gamma", gamma.is_some())?;
                reject("degree", degree.is_some())?;
                reject("offset", offset.is_some())?;
                reject("scale", scale.is_some())?;
                KernelKind::CsSubsequence { t: t.unwrap_or(2) }
            }
            other => return Err(format!("unknown kernel kind {other:?}")),
        };
        let spec = KernelSpec::new(kind).map_err(|e| e.to_string())?;
        Ok(spec.with_pad_to_max(pad))
    }
}
