//! Seeded two-stage sampling and Monte-Carlo characterization of the
//! estimators.
//!
//! Random streams: every replication `r` at grid index `g` draws from its own
//! ChaCha8 stream, seeded with the configured seed and stream id
//! `(g << 32) | r`. Replications therefore produce the same draws whatever
//! order or thread they run on, and results are reduced in replication order.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{self, PairedSampleBlock, SampleBlock};
use crate::exact::{self, DiscreteDistribution, DiscreteMixture, JointDiscreteMixture};
use crate::kernels::{KernelSpec, Point};
use crate::sum;

/// Recommended minimum `(n, m)` when nothing is known about the problem.
pub fn recommend_sizes() -> (usize, usize) {
    (10, 10)
}

/// True unless `m >= n >= 10`.
pub fn below_recommended(n: usize, m: usize) -> bool {
    let (n_min, _) = recommend_sizes();
    !(n >= n_min && m >= n)
}

struct DistSampler<'a> {
    atoms: &'a [Point],
    index: WeightedIndex<f64>,
}

impl<'a> DistSampler<'a> {
    fn new(dist: &'a DiscreteDistribution) -> Result<Self> {
        let index = WeightedIndex::new(dist.weights().iter().copied())
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        Ok(DistSampler {
            atoms: dist.atoms(),
            index,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, m: usize) -> Vec<Point> {
        (0..m)
            .map(|_| self.atoms[self.index.sample(rng)].clone())
            .collect()
    }
}

/// Reusable sampler for a [`DiscreteMixture`].
pub struct MixtureSampler<'a> {
    outer: WeightedIndex<f64>,
    inner: Vec<DistSampler<'a>>,
}

impl<'a> MixtureSampler<'a> {
    pub fn new(mix: &'a DiscreteMixture) -> Result<Self> {
        Ok(MixtureSampler {
            outer: WeightedIndex::new(mix.probs().iter().copied())
                .map_err(|e| Error::InvalidDistribution(e.to_string()))?,
            inner: mix
                .components()
                .iter()
                .map(DistSampler::new)
                .collect::<Result<_>>()?,
        })
    }

    /// Draws `n` components, then `m` points from each.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, m: usize) -> Result<SampleBlock> {
        let clusters = (0..n)
            .map(|_| self.inner[self.outer.sample(rng)].draw(rng, m))
            .collect();
        SampleBlock::new(clusters)
    }
}

/// Reusable sampler for a [`JointDiscreteMixture`].
pub struct JointSampler<'a> {
    outer: WeightedIndex<f64>,
    inner: Vec<(DistSampler<'a>, DistSampler<'a>)>,
}

impl<'a> JointSampler<'a> {
    pub fn new(joint: &'a JointDiscreteMixture) -> Result<Self> {
        Ok(JointSampler {
            outer: WeightedIndex::new(joint.probs().iter().copied())
                .map_err(|e| Error::InvalidDistribution(e.to_string()))?,
            inner: joint
                .pairs()
                .iter()
                .map(|(p, q)| Ok((DistSampler::new(p)?, DistSampler::new(q)?)))
                .collect::<Result<_>>()?,
        })
    }

    /// Draws `n` pairs `(P_i, Q_i)`, then `m` points from each side.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        m: usize,
    ) -> Result<PairedSampleBlock> {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let (p, q) = &self.inner[self.outer.sample(rng)];
            xs.push(p.draw(rng, m));
            ys.push(q.draw(rng, m));
        }
        PairedSampleBlock::new(SampleBlock::new(xs)?, SampleBlock::new(ys)?)
    }
}

/// Two-stage sample: `n` distributions from `mix`, `m` points from each.
pub fn sample_two_stage<R: Rng + ?Sized>(
    rng: &mut R,
    mix: &DiscreteMixture,
    n: usize,
    m: usize,
) -> Result<SampleBlock> {
    MixtureSampler::new(mix)?.sample(rng, n, m)
}

pub fn sample_two_stage_joint<R: Rng + ?Sized>(
    rng: &mut R,
    joint: &JointDiscreteMixture,
    n: usize,
    m: usize,
) -> Result<PairedSampleBlock> {
    JointSampler::new(joint)?.sample(rng, n, m)
}

/// The generator used for replication `rep` at grid index `grid_index`.
pub fn replication_rng(seed: u64, grid_index: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((grid_index as u64) << 32) | rep as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Variance,
    Covariance,
    Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Mixture(DiscreteMixture),
    Joint(JointDiscreteMixture),
}

impl Source {
    fn atoms(&self) -> Vec<&Point> {
        match self {
            Source::Mixture(mix) => mix.components().iter().flat_map(|c| c.atoms()).collect(),
            Source::Joint(joint) => joint
                .pairs()
                .iter()
                .flat_map(|(p, q)| p.atoms().iter().chain(q.atoms()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub seed: u64,
    pub replications: usize,
    /// `(n, m)` pairs.
    pub grid: Vec<(usize, usize)>,
    pub estimator: EstimatorKind,
    pub kernel: KernelSpec,
    pub source: Source,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        if self.replications > u32::MAX as usize {
            return Err(Error::InvalidParameter("too many replications".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("grid is empty".into()));
        }
        self.kernel.validate()?;
        let min_m = match (self.estimator, &self.source) {
            (EstimatorKind::Variance, Source::Mixture(_)) => 2,
            (EstimatorKind::Covariance | EstimatorKind::Correlation, Source::Joint(_)) => 1,
            (EstimatorKind::Variance, Source::Joint(_)) => {
                return Err(Error::InvalidParameter(
                    "the variance estimator needs a mixture source".into(),
                ))
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "covariance and correlation estimators need a joint source".into(),
                ))
            }
        };
        for &(n, m) in &self.grid {
            if n < 2 || m < min_m {
                return Err(Error::InvalidParameter(format!(
                    "grid point n={n}, m={m}: need n >= 2 and m >= {min_m}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPointResult {
    pub n: usize,
    pub m: usize,
    pub mean: f64,
    /// Standard deviation of the estimator across replications.
    pub sd: f64,
    /// Variance of the estimator across replications.
    pub variance: f64,
    /// `sd / sqrt(R)`.
    pub standard_error: f64,
    /// Exact value of the estimated quantity.
    pub exact: f64,
    /// `mean - exact`.
    pub bias: f64,
    pub below_recommended: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    N,
    M,
}

/// Least-squares fit of `ln(estimator variance)` against `ln(axis)` with the
/// other size held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub axis: Axis,
    pub fixed: usize,
    pub points: usize,
    pub slope_variance: f64,
    /// Slope of `ln(sd)`, half of `slope_variance`.
    pub slope_sd: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub estimator: EstimatorKind,
    pub kernel: KernelSpec,
    pub seed: u64,
    pub replications: usize,
    pub points: Vec<GridPointResult>,
    pub slopes: Vec<SlopeFit>,
}

/// Minimum number of grid points for a slope fit.
pub const MIN_FIT_POINTS: usize = 4;

/// Ordinary least squares `y = a + b x`. Returns `(b, a, r²)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let k = xs.len() as f64;
    let mx = sum::sum(xs.iter().copied()) / k;
    let my = sum::sum(ys.iter().copied()) / k;
    let sxx = sum::sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = sum::sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let syy = sum::sum(ys.iter().map(|y| (y - my) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r_squared)
}

type SizeOf = fn(&GridPointResult) -> usize;

fn fit_slopes(points: &[GridPointResult]) -> Vec<SlopeFit> {
    let mut fits = Vec::new();
    for axis in [Axis::N, Axis::M] {
        let (vary, fixed_of): (SizeOf, SizeOf) = match axis {
            Axis::N => (|p| p.n, |p| p.m),
            Axis::M => (|p| p.m, |p| p.n),
        };
        let mut fixed_values: Vec<usize> = points.iter().map(fixed_of).collect();
        fixed_values.sort_unstable();
        fixed_values.dedup();
        for fixed in fixed_values {
            let mut sel: Vec<&GridPointResult> =
                points.iter().filter(|p| fixed_of(p) == fixed).collect();
            sel.sort_by_key(|p| vary(p));
            sel.dedup_by_key(|p| vary(p));
            if sel.len() < MIN_FIT_POINTS || sel.iter().any(|p| p.variance <= 0.0) {
                continue;
            }
            let xs: Vec<f64> = sel.iter().map(|p| (vary(p) as f64).ln()).collect();
            let ys: Vec<f64> = sel.iter().map(|p| p.variance.ln()).collect();
            let (slope, intercept, r_squared) = fit_line(&xs, &ys);
            fits.push(SlopeFit {
                axis,
                fixed,
                points: sel.len(),
                slope_variance: slope,
                slope_sd: slope / 2.0,
                intercept,
                r_squared,
            });
        }
    }
    fits
}

fn exact_value(config: &SimulationConfig, kernel: &KernelSpec) -> Result<f64> {
    match (&config.source, config.estimator) {
        (Source::Mixture(mix), _) => exact::variance_exact(kernel, mix),
        (Source::Joint(joint), EstimatorKind::Correlation) => exact::correlation_exact(kernel, joint),
        (Source::Joint(joint), _) => exact::covariance_exact(kernel, joint),
    }
}

/// Runs the configured estimator `R` times at every grid point.
pub fn run(config: &SimulationConfig) -> Result<SimulationResult> {
    config.validate()?;
    let kernel = config.kernel.resolve_for(config.source.atoms());
    let exact = exact_value(config, &kernel)?;

    let mix_sampler = match &config.source {
        Source::Mixture(mix) => Some(MixtureSampler::new(mix)?),
        Source::Joint(_) => None,
    };
    let joint_sampler = match &config.source {
        Source::Joint(joint) => Some(JointSampler::new(joint)?),
        Source::Mixture(_) => None,
    };

    let one = |grid_index: usize, n: usize, m: usize, rep: usize| -> Result<f64> {
        let mut rng = replication_rng(config.seed, grid_index, rep);
        let value = match config.estimator {
            EstimatorKind::Variance => {
                let block = mix_sampler.as_ref().unwrap().sample(&mut rng, n, m)?;
                estimators::distributional_variance(&kernel, &block)?.value
            }
            EstimatorKind::Covariance => {
                let paired = joint_sampler.as_ref().unwrap().sample(&mut rng, n, m)?;
                estimators::distributional_covariance(&kernel, &paired)?.value
            }
            EstimatorKind::Correlation => {
                let paired = joint_sampler.as_ref().unwrap().sample(&mut rng, n, m)?;
                estimators::distributional_correlation(&kernel, &paired)?.raw
            }
        };
        Ok(value)
    };

    let mut points = Vec::with_capacity(config.grid.len());
    for (grid_index, &(n, m)) in config.grid.iter().enumerate() {
        let values: Vec<f64> = (0..config.replications)
            .into_par_iter()
            .map(|rep| {
                one(grid_index, n, m, rep).map_err(|e| Error::Simulation {
                    replication: rep,
                    n,
                    m,
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()?;
        let r = values.len() as f64;
        let mean = sum::sum(values.iter().copied()) / r;
        let variance = if values.len() > 1 {
            sum::sum(values.iter().map(|v| (v - mean) * (v - mean))) / (r - 1.0)
        } else {
            0.0
        };
        let sd = variance.sqrt();
        points.push(GridPointResult {
            n,
            m,
            mean,
            sd,
            variance,
            standard_error: sd / r.sqrt(),
            exact,
            bias: mean - exact,
            below_recommended: below_recommended(n, m),
        });
    }

    Ok(SimulationResult {
        estimator: config.estimator,
        kernel,
        seed: config.seed,
        replications: config.replications,
        slopes: fit_slopes(&points),
        points,
    })
}
