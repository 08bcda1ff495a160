use crate::kernels::PointKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("kernel {kernel} cannot be evaluated on {found} points")]
    KindMismatch { kernel: &'static str, found: PointKind },

    #[error("points of different kinds: {left} and {right}")]
    MixedKinds { left: PointKind, right: PointKind },

    #[error("vector lengths differ ({left} vs {right}) and zero padding is disabled")]
    DimensionMismatch { left: usize, right: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("at index pair ({i}, {j}): {source}")]
    AtPair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("need at least {needed} clusters, got {got}")]
    TooFewClusters { needed: usize, got: usize },

    #[error("cluster {cluster} has {got} samples, need at least {needed}")]
    TooFewInnerSamples { cluster: usize, needed: usize, got: usize },

    #[error("paired blocks have {x} and {y} clusters")]
    ClusterCountMismatch { x: usize, y: usize },

    #[error("self-covariance not positive (x: {var_x}, y: {var_y})")]
    DegenerateDenominator { var_x: f64, var_y: f64 },

    #[error("marginal distributional variance not positive (p: {var_p}, q: {var_q})")]
    DegenerateMarginal { var_p: f64, var_q: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix not symmetric at ({i}, {j})")]
    AsymmetricInput { i: usize, j: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("ensemble enumeration needs {states} states, cap is {cap}")]
    TooManyStates { states: u128, cap: u128 },

    #[error("labels contain a single class")]
    SingleClass,

    #[error("input has zero variance")]
    DegenerateVariance,

    #[error("input lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input")]
    Empty,

    #[error("replication {replication} at n={n}, m={m}: {source}")]
    Simulation {
        replication: usize,
        n: usize,
        m: usize,
        #[source]
        source: Box<Error>,
    },
}
