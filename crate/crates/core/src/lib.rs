//! Kernel scores for generative models.
//!
//! This crate evaluates predictive distributions that are only available
//! through samples (embeddings or token sequences). It provides:
//!
//! - [`kernels`]: positive semi-definite kernels on vectors and token
//!   sequences, Gram matrices and a p.s.d. check.
//! - [`estimators`]: predictive kernel entropy, kernel score, unbiased MMD²,
//!   distributional variance / covariance / correlation estimators and the
//!   noise-bias-variance decomposition of the expected kernel score.
//! - [`exact`]: closed-form values of all of the above for finite discrete
//!   distributions and mixtures of them. These are the ground truth the
//!   estimators are tested against.
//! - [`simulate`]: seeded two-stage sampling and a Monte-Carlo harness that
//!   measures estimator mean, spread and convergence rate.
//! - [`evaluate`]: RougeL, binarized loss, AUROC, Pearson correlation and the
//!   lexical-similarity baseline.
//!
//! ```
//! use kscore_core::{estimators, KernelSpec, Point, SampleBlock};
//!
//! let tok = |t: u32| Point::Tokens(vec![t]);
//! let block = SampleBlock::new(vec![vec![tok(0), tok(0)], vec![tok(1), tok(1)]]).unwrap();
//! let var = estimators::distributional_variance(&KernelSpec::delta(), &block).unwrap();
//! assert_eq!(var.value, 1.0);
//! ```

pub mod error;
pub mod estimators;
pub mod evaluate;
pub mod exact;
pub mod kernels;
pub mod simulate;
mod sum;

pub use error::{Error, Result};
pub use estimators::{
    CorrelationEstimate, DecompositionReport, Estimate, Flag, PairedSampleBlock, SampleBlock,
    TargetSample,
};
pub use exact::{DiscreteDistribution, DiscreteMixture, JointDiscreteMixture};
pub use kernels::{GramMatrix, KernelKind, KernelSpec, Point, PointKind, TokenId};
pub use sum::Accumulator;
