//! Sample-based estimators.
//!
//! All estimators take generations grouped into clusters: cluster `i` holds
//! `m_i` draws from one predictive distribution `P_i`, and the clusters are
//! themselves independent draws of the random predictive distribution.
//! Kernel values are summed block by block (one block per pair of clusters)
//! with compensated summation, so results do not depend on thread count.
//!
//! Estimates that are unbiased for a non-negative quantity can still come out
//! negative on a finite sample. They are returned unchanged and tagged with a
//! [`Flag`], since truncating them at zero would bias them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, common_kind, KernelSpec, Point, PointKind};
use crate::simulate::below_recommended;
use crate::sum::{self, Accumulator};

/// Two-stage sample: `n` clusters of generations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBlock {
    clusters: Vec<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl SampleBlock {
    pub fn new(clusters: Vec<Vec<Point>>) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::TooFewClusters { needed: 1, got: 0 });
        }
        for (cluster, points) in clusters.iter().enumerate() {
            if points.is_empty() {
                return Err(Error::TooFewInnerSamples {
                    cluster,
                    needed: 1,
                    got: 0,
                });
            }
        }
        common_kind(clusters.iter().flatten())?;
        Ok(SampleBlock {
            clusters,
            label: None,
        })
    }

    /// A block with a single cluster.
    pub fn single(points: Vec<Point>) -> Result<Self> {
        Self::new(vec![points])
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn n(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    pub fn clusters(&self) -> &[Vec<Point>] {
        &self.clusters
    }

    pub fn kind(&self) -> PointKind {
        self.clusters[0][0].kind()
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.clusters.iter().flatten()
    }

    fn flat(&self) -> (Vec<Point>, Vec<usize>) {
        let mut offsets = Vec::with_capacity(self.n() + 1);
        offsets.push(0);
        for c in &self.clusters {
            offsets.push(offsets.last().unwrap() + c.len());
        }
        (self.points().cloned().collect(), offsets)
    }

    fn require(&self, min_clusters: usize, min_inner: usize) -> Result<()> {
        if self.n() < min_clusters {
            return Err(Error::TooFewClusters {
                needed: min_clusters,
                got: self.n(),
            });
        }
        for (cluster, points) in self.clusters.iter().enumerate() {
            if points.len() < min_inner {
                return Err(Error::TooFewInnerSamples {
                    cluster,
                    needed: min_inner,
                    got: points.len(),
                });
            }
        }
        Ok(())
    }
}

/// Cluster-aligned samples `X_i ~ P_i`, `Y_i ~ Q_i` with `(P_i, Q_i)` drawn jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSampleBlock {
    x: SampleBlock,
    y: SampleBlock,
}

impl PairedSampleBlock {
    pub fn new(x: SampleBlock, y: SampleBlock) -> Result<Self> {
        if x.n() != y.n() {
            return Err(Error::ClusterCountMismatch { x: x.n(), y: y.n() });
        }
        if x.kind() != y.kind() {
            return Err(Error::MixedKinds {
                left: x.kind(),
                right: y.kind(),
            });
        }
        Ok(PairedSampleBlock { x, y })
    }

    /// Pairs a block with itself.
    pub fn with_itself(block: SampleBlock) -> Self {
        PairedSampleBlock {
            x: block.clone(),
            y: block,
        }
    }

    pub fn x(&self) -> &SampleBlock {
        &self.x
    }

    pub fn y(&self) -> &SampleBlock {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }
}

/// Observed draws from the target distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSample {
    points: Vec<Point>,
}

impl TargetSample {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        common_kind(&points)?;
        Ok(TargetSample { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    NegativeVariance,
    NegativeCovariance,
    NegativeBias,
    NegativeMmd2,
    CorrelationOutOfRange,
    /// The kernel is not certified positive semi-definite.
    NonPsdKernel,
    NoiseUnavailable,
    BiasUnavailable,
    /// Sample sizes below `m >= n >= 10`.
    BelowRecommendedSizes,
}

/// A point estimate with the warnings raised while computing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub flags: Vec<Flag>,
}

impl Estimate {
    fn new(value: f64, spec: &KernelSpec, negative: Flag) -> Self {
        let mut flags = Vec::new();
        if value < 0.0 {
            flags.push(negative);
        }
        if !spec.is_certified_psd() {
            flags.push(Flag::NonPsdKernel);
        }
        Estimate { value, flags }
    }
}

/// How `‖P‖²_k` is estimated from generations inside the kernel score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormEstimate {
    /// Mean over distinct pairs; unbiased.
    #[default]
    Unbiased,
    /// Mean over all pairs including `k(x, x)`, as in the V-statistic MMD.
    Biased,
}

fn mean_off_diagonal(spec: &KernelSpec, points: &[Point]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: points.len(),
        });
    }
    let g = kernels::gram(spec, points)?;
    let n = g.len();
    let mut acc = Accumulator::new();
    for i in 0..n {
        for &v in &g.row(i)[i + 1..] {
            acc.add(v);
        }
    }
    Ok(2.0 * acc.total() / (n * (n - 1)) as f64)
}

fn mean_all(values: &[f64]) -> f64 {
    sum::sum(values.iter().copied()) / values.len() as f64
}

/// Predictive kernel entropy: minus the mean kernel value over ordered pairs
/// of distinct generations.
pub fn kernel_entropy(spec: &KernelSpec, generations: &[Point]) -> Result<f64> {
    let spec = spec.resolve_for(generations);
    Ok(-mean_off_diagonal(&spec, generations)?)
}

/// Kernel score of the generations' distribution against the target draws,
/// `‖P‖²_k - 2 E k(X, y)`, averaged over target points.
pub fn kernel_score(spec: &KernelSpec, generations: &[Point], target: &TargetSample) -> Result<f64> {
    kernel_score_with(spec, generations, target, NormEstimate::Unbiased)
}

pub fn kernel_score_with(
    spec: &KernelSpec,
    generations: &[Point],
    target: &TargetSample,
    norm: NormEstimate,
) -> Result<f64> {
    let spec = spec.resolve_for(generations.iter().chain(target.points()));
    let self_term = match norm {
        NormEstimate::Unbiased => mean_off_diagonal(&spec, generations)?,
        NormEstimate::Biased => mean_gram(&spec, generations)?,
    };
    let cross = kernels::cross_gram(&spec, generations, target.points())?;
    Ok(self_term - 2.0 * mean_all(&cross))
}

/// Unbiased MMD² between the generations and the target draws.
pub fn mmd2(spec: &KernelSpec, generations: &[Point], target: &[Point]) -> Result<Estimate> {
    mmd2_with(spec, generations, target, NormEstimate::Unbiased)
}

/// MMD² with a choice of estimator for the two within-sample terms.
///
/// The biased form includes `k(x, x)` terms and is exactly zero for two
/// identical samples; the unbiased form is not.
pub fn mmd2_with(
    spec: &KernelSpec,
    generations: &[Point],
    target: &[Point],
    norm: NormEstimate,
) -> Result<Estimate> {
    let spec = spec.resolve_for(generations.iter().chain(target));
    let (within_p, within_q) = match norm {
        NormEstimate::Unbiased => (
            mean_off_diagonal(&spec, generations)?,
            mean_off_diagonal(&spec, target)?,
        ),
        NormEstimate::Biased => (mean_gram(&spec, generations)?, mean_gram(&spec, target)?),
    };
    let cross = kernels::cross_gram(&spec, generations, target)?;
    let value = within_p + within_q - 2.0 * mean_all(&cross);
    Ok(Estimate::new(value, &spec, Flag::NegativeMmd2))
}

fn mean_gram(spec: &KernelSpec, points: &[Point]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let g = kernels::gram(spec, points)?;
    let all: Vec<f64> = (0..g.len()).flat_map(|i| g.row(i).to_vec()).collect();
    Ok(mean_all(&all))
}

/// Within-cluster and between-cluster kernel means of one block.
struct BlockMeans {
    /// Per-cluster mean of `k(X_ij, X_it)` over `j != t`.
    within: Vec<f64>,
    /// Mean over ordered cluster pairs `i != s` of the mean `k(X_ij, X_st)`.
    between: f64,
}

/// Below this many points, blocks are summed on the calling thread.
const PARALLEL_POINTS: usize = 256;

/// Sum of `k(xs[a], ys[b])` over `a` in `ra`, `b` in `rb`; with `upper`
/// set, only pairs `b > a` (for a block on the diagonal of one sample).
fn block_sum(
    pairs: &kernels::PairEval<'_>,
    ra: std::ops::Range<usize>,
    rb: std::ops::Range<usize>,
    upper: bool,
) -> Result<f64> {
    let mut acc = Accumulator::new();
    for a in ra {
        let start = if upper { a + 1 } else { rb.start };
        for b in start..rb.end {
            acc.add(pairs.eval(a, b)?);
        }
    }
    Ok(acc.total())
}

/// Row `i` of the block-mean table: `f(i, s)` for every `s`, computed in
/// parallel over `i` for large samples.
fn block_rows<F>(n: usize, points: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    if points >= PARALLEL_POINTS {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(&f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

fn block_means(spec: &KernelSpec, block: &SampleBlock) -> Result<BlockMeans> {
    let (points, offsets) = block.flat();
    let pairs = kernels::PairEval::new(spec, &points, &points)?;
    let n = block.n();
    let range = |i: usize| offsets[i]..offsets[i + 1];

    // row i holds the within mean at s = i and between means for s > i
    let rows = block_rows(n, points.len(), |i| {
        let ri = range(i);
        let m = ri.len();
        let mut row = vec![0.0; n];
        row[i] = 2.0 * block_sum(&pairs, ri.clone(), ri.clone(), true)? / (m * (m - 1)) as f64;
        for s in (i + 1)..n {
            let rs = range(s);
            row[s] = block_sum(&pairs, ri.clone(), rs.clone(), false)? / (m * rs.len()) as f64;
        }
        Ok(row)
    })?;

    let within = (0..n).map(|i| rows[i][i]).collect();
    let between = sum::sum((0..n).flat_map(|i| rows[i][i + 1..].iter().copied()));
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(BlockMeans {
        within,
        between: between / pairs,
    })
}

/// Unbiased estimator of the distributional variance `Var_k(P)`: mean
/// within-cluster similarity minus mean between-cluster similarity.
///
/// Unequal cluster sizes are allowed; each cluster is normalized by its own
/// size and clusters are weighted equally.
pub fn distributional_variance(spec: &KernelSpec, block: &SampleBlock) -> Result<Estimate> {
    block.require(2, 2)?;
    let spec = spec.resolve_for(block.points());
    let means = block_means(&spec, block)?;
    let value = mean_all(&means.within) - means.between;
    Ok(Estimate::new(value, &spec, Flag::NegativeVariance))
}

/// Unbiased estimator of the distributional covariance `Cov_k(P, Q)`.
///
/// The same-cluster term averages over all `m_x * m_y` pairs of cluster `i`,
/// including `j == t`.
pub fn distributional_covariance(spec: &KernelSpec, paired: &PairedSampleBlock) -> Result<Estimate> {
    let spec = spec.resolve_for(paired.x.points().chain(paired.y.points()));
    covariance_value(&spec, paired).map(|v| Estimate::new(v, &spec, Flag::NegativeCovariance))
}

fn covariance_value(spec: &KernelSpec, paired: &PairedSampleBlock) -> Result<f64> {
    paired.x.require(2, 1)?;
    paired.y.require(2, 1)?;
    let (xs, x_off) = paired.x.flat();
    let (ys, y_off) = paired.y.flat();
    let pairs = kernels::PairEval::new(spec, &xs, &ys)?;
    let n = paired.n();

    let rows = block_rows(n, xs.len() + ys.len(), |i| {
        let ri = x_off[i]..x_off[i + 1];
        (0..n)
            .map(|s| {
                let rs = y_off[s]..y_off[s + 1];
                let len = ri.len() * rs.len();
                Ok(block_sum(&pairs, ri.clone(), rs, false)? / len as f64)
            })
            .collect()
    })?;

    let same = sum::sum((0..n).map(|i| rows[i][i])) / n as f64;
    let different = sum::sum(
        (0..n).flat_map(|i| rows[i].iter().enumerate().filter(move |(s, _)| *s != i).map(|(_, v)| *v)),
    ) / (n * (n - 1)) as f64;
    Ok(same - different)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    /// `Cov(X, Y) / sqrt(Cov(X, X) Cov(Y, Y))`, unclamped.
    pub raw: f64,
    /// `raw` clamped to `[-1, 1]`.
    pub clamped: f64,
    pub covariance: f64,
    pub self_covariance_x: f64,
    pub self_covariance_y: f64,
    pub flags: Vec<Flag>,
}

/// Distributional correlation estimate. The covariance estimator is used for
/// the variance terms in the denominator.
pub fn distributional_correlation(
    spec: &KernelSpec,
    paired: &PairedSampleBlock,
) -> Result<CorrelationEstimate> {
    let spec = spec.resolve_for(paired.x.points().chain(paired.y.points()));
    let covariance = covariance_value(&spec, paired)?;
    let var_x = covariance_value(&spec, &PairedSampleBlock::with_itself(paired.x.clone()))?;
    let var_y = covariance_value(&spec, &PairedSampleBlock::with_itself(paired.y.clone()))?;
    if !(var_x > 0.0 && var_y > 0.0) {
        return Err(Error::DegenerateDenominator { var_x, var_y });
    }
    let raw = covariance / (var_x * var_y).sqrt();
    let mut flags = Vec::new();
    if !(-1.0..=1.0).contains(&raw) {
        flags.push(Flag::CorrelationOutOfRange);
    }
    if covariance < 0.0 {
        flags.push(Flag::NegativeCovariance);
    }
    if !spec.is_certified_psd() {
        flags.push(Flag::NonPsdKernel);
    }
    Ok(CorrelationEstimate {
        raw,
        clamped: raw.clamp(-1.0, 1.0),
        covariance,
        self_covariance_x: var_x,
        self_covariance_y: var_y,
        flags,
    })
}

/// Terms of the decomposition of the expected kernel score,
/// `score = noise + bias + variance`.
///
/// Sample-based reports leave terms that cannot be estimated without bias as
/// `None` and record why in `flags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `-‖Q‖²_k`.
    pub noise: Option<f64>,
    /// `‖E[P] - Q‖²_k`.
    pub bias: Option<f64>,
    pub variance: f64,
    pub covariance: Option<f64>,
    pub correlation: Option<f64>,
    /// Expected predictive kernel entropy, `-E‖P‖²_k`.
    pub entropy: f64,
    /// Expected kernel score.
    pub kernel_score: f64,
    /// Expected MMD², `kernel_score + ‖Q‖²_k`.
    pub mmd2: Option<f64>,
    /// `|kernel_score - (noise + bias + variance)|`, with the bias taken
    /// from its direct mean-embedding form.
    pub identity_residual: Option<f64>,
    pub n: usize,
    pub cluster_sizes: Vec<usize>,
    pub target_size: usize,
    pub kernel: KernelSpec,
    pub flags: Vec<Flag>,
}

/// Estimates every term of the decomposition from an ensemble of predictive
/// samples and target draws.
///
/// Each cluster is one ensemble member (or one independently trained model).
/// The kernel score is the mean over clusters of the per-cluster score, so it
/// estimates the expected score of a single member. Noise needs at least two
/// target points; bias is only reported when noise is.
pub fn decompose(
    spec: &KernelSpec,
    ensemble: &SampleBlock,
    target: &TargetSample,
) -> Result<DecompositionReport> {
    ensemble.require(2, 2)?;
    if ensemble.kind() != kernels::common_kind(target.points())? {
        return Err(Error::MixedKinds {
            left: ensemble.kind(),
            right: target.points()[0].kind(),
        });
    }
    let spec = spec.resolve_for(ensemble.points().chain(target.points()));
    let means = block_means(&spec, ensemble)?;
    let n = ensemble.n();

    let cross_means: Vec<f64> = ensemble
        .clusters()
        .iter()
        .map(|c| kernels::cross_gram(&spec, c, target.points()).map(|v| mean_all(&v)))
        .collect::<Result<_>>()?;

    let within = mean_all(&means.within);
    let cross = mean_all(&cross_means);
    let kernel_score = sum::sum(
        means
            .within
            .iter()
            .zip(&cross_means)
            .map(|(w, c)| w - 2.0 * c),
    ) / n as f64;
    let variance = within - means.between;

    let mut flags = Vec::new();
    let target_norm = if target.len() >= 2 {
        Some(mean_off_diagonal(&spec, target.points())?)
    } else {
        flags.push(Flag::NoiseUnavailable);
        flags.push(Flag::BiasUnavailable);
        None
    };
    let noise = target_norm.map(|q| -q);
    let bias = noise.map(|noise| kernel_score - noise - variance);
    let bias_direct = target_norm.map(|q| means.between - 2.0 * cross + q);
    let identity_residual = noise
        .zip(bias_direct)
        .map(|(noise, bias)| (kernel_score - (noise + bias + variance)).abs());

    if variance < 0.0 {
        flags.push(Flag::NegativeVariance);
    }
    if bias.is_some_and(|b| b < 0.0) {
        flags.push(Flag::NegativeBias);
    }
    if !spec.is_certified_psd() {
        flags.push(Flag::NonPsdKernel);
    }
    let sizes = ensemble.cluster_sizes();
    if below_recommended(n, sizes.iter().copied().min().unwrap_or(0)) {
        flags.push(Flag::BelowRecommendedSizes);
    }

    Ok(DecompositionReport {
        noise,
        bias,
        variance,
        covariance: None,
        correlation: None,
        entropy: -within,
        kernel_score,
        mmd2: target_norm.map(|q| kernel_score + q),
        identity_residual,
        n,
        cluster_sizes: sizes,
        target_size: target.len(),
        kernel: spec,
        flags,
    })
}

/// Variance of an `n`-member ensemble with identically distributed members.
pub fn ensemble_variance_split(var_single: f64, cov_pair: f64, n: usize) -> f64 {
    assert!(n >= 1, "ensemble size must be at least 1");
    if n == 1 {
        return var_single;
    }
    let n = n as f64;
    var_single / n + (n - 1.0) / n * cov_pair
}

/// Expected score improvement of an `n`-member ensemble over one member.
pub fn ensemble_gain(var_single: f64, cov_pair: f64, n: usize) -> f64 {
    assert!(n >= 1, "ensemble size must be at least 1");
    let n = n as f64;
    (n - 1.0) / n * (var_single - cov_pair)
}

const SYMMETRY_TOL: f64 = 1e-12;

/// Ensemble variance for members that are not identically distributed.
///
/// `cov_matrix[i][j]` is `Cov_k(P_i, P_j)`; its diagonal must equal
/// `member_vars`.
pub fn ensemble_variance_general(member_vars: &[f64], cov_matrix: &[Vec<f64>]) -> Result<f64> {
    let n = member_vars.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    if cov_matrix.len() != n || cov_matrix.iter().any(|row| row.len() != n) {
        return Err(Error::ShapeMismatch(format!(
            "covariance matrix must be {n}x{n}"
        )));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0);
    for i in 0..n {
        if !close(cov_matrix[i][i], member_vars[i]) {
            return Err(Error::ShapeMismatch(format!(
                "diagonal entry {i} does not match member variance"
            )));
        }
        for j in (i + 1)..n {
            if !close(cov_matrix[i][j], cov_matrix[j][i]) {
                return Err(Error::AsymmetricInput { i, j });
            }
        }
    }
    let mut acc = Accumulator::new();
    for (i, row) in cov_matrix.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            acc.add(if i == j { member_vars[i] } else { c });
        }
    }
    Ok(acc.total() / (n * n) as f64)
}
