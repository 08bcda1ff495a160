//! Closed-form kernel functionals of finite discrete distributions.
//!
//! Every quantity the estimators target has an exact value when the
//! predictive distribution is a finite mixture of finitely supported
//! distributions. These are the oracles the Monte-Carlo checks compare
//! against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::DecompositionReport;
use crate::kernels::{common_kind, eval_kernel, KernelSpec, Point, PointKind};
use crate::sum::{self, Accumulator};

const WEIGHT_TOL: f64 = 1e-12;

/// Maximum number of enumerated states when building ensemble mixtures.
pub const MAX_ENSEMBLE_STATES: u128 = 100_000;

fn check_simplex(weights: &[f64], what: &str) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: no entries")));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries must be finite and non-negative"
        )));
    }
    let total = sum::sum(weights.iter().copied());
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Finitely supported distribution over points.
///
/// Atoms are distinct: equal atoms passed to the constructor are merged by
/// adding their weights. Equality is exact, so atoms meant to coincide must
/// be bit-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: atoms.len(),
                right: weights.len(),
            });
        }
        check_simplex(&weights, "weights")?;
        common_kind(&atoms)?;
        Ok(Self::merged(atoms, weights))
    }

    fn merged(atoms: Vec<Point>, weights: Vec<f64>) -> Self {
        let mut out = DiscreteDistribution {
            atoms: Vec::with_capacity(atoms.len()),
            weights: Vec::with_capacity(atoms.len()),
        };
        for (atom, w) in atoms.into_iter().zip(weights) {
            match out.atoms.iter().position(|a| *a == atom) {
                Some(i) => out.weights[i] += w,
                None => {
                    out.atoms.push(atom);
                    out.weights.push(w);
                }
            }
        }
        out
    }

    pub fn point_mass(atom: Point) -> Self {
        DiscreteDistribution {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn uniform(atoms: Vec<Point>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty);
        }
        let w = 1.0 / atoms.len() as f64;
        let weights = vec![w; atoms.len()];
        common_kind(&atoms)?;
        Ok(Self::merged(atoms, weights))
    }

    /// Categorical distribution over classes `0..probs.len()`, with class
    /// `c` represented by the one-token sequence `[c]`.
    pub fn categorical(probs: &[f64]) -> Result<Self> {
        let atoms = (0..probs.len())
            .map(|c| Point::Tokens(vec![c as u32]))
            .collect();
        Self::new(atoms, probs.to_vec())
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> PointKind {
        self.atoms[0].kind()
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }

    /// Weighted average of distributions.
    fn average<'a>(parts: impl IntoIterator<Item = (f64, &'a DiscreteDistribution)>) -> Self {
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for (p, d) in parts {
            for (a, w) in d.atoms.iter().zip(&d.weights) {
                atoms.push(a.clone());
                weights.push(p * w);
            }
        }
        Self::merged(atoms, weights)
    }
}

/// `⟨P|k|Q⟩ = Σ_i Σ_j p_i q_j k(x_i, y_j)`.
pub fn bilinear(spec: &KernelSpec, p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    let mut acc = Accumulator::new();
    for (x, wp) in p.atoms.iter().zip(&p.weights) {
        for (y, wq) in q.atoms.iter().zip(&q.weights) {
            acc.add(wp * wq * eval_kernel(spec, x, y)?);
        }
    }
    Ok(acc.total())
}

/// `Σ_i p_i k(x_i, y)`.
fn mean_kernel_at(spec: &KernelSpec, p: &DiscreteDistribution, y: &Point) -> Result<f64> {
    let mut acc = Accumulator::new();
    for (x, w) in p.atoms.iter().zip(&p.weights) {
        acc.add(w * eval_kernel(spec, x, y)?);
    }
    Ok(acc.total())
}

/// Kernel score `S_k(P, y) = ⟨P|k|P⟩ - 2 Σ_i p_i k(x_i, y)`.
pub fn kernel_score_exact(spec: &KernelSpec, p: &DiscreteDistribution, y: &Point) -> Result<f64> {
    Ok(bilinear(spec, p, p)? - 2.0 * mean_kernel_at(spec, p, y)?)
}

/// Finite mixture: the random distribution equals `components[i]` with
/// probability `probs[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMixture {
    components: Vec<DiscreteDistribution>,
    probs: Vec<f64>,
}

impl DiscreteMixture {
    pub fn new(components: Vec<DiscreteDistribution>, probs: Vec<f64>) -> Result<Self> {
        if components.len() != probs.len() {
            return Err(Error::LengthMismatch {
                left: components.len(),
                right: probs.len(),
            });
        }
        check_simplex(&probs, "mixture probabilities")?;
        common_kind(components.iter().flat_map(|c| c.atoms.iter()))?;
        Ok(DiscreteMixture { components, probs })
    }

    /// Mixture that always returns `dist`.
    pub fn deterministic(dist: DiscreteDistribution) -> Self {
        DiscreteMixture {
            components: vec![dist],
            probs: vec![1.0],
        }
    }

    pub fn components(&self) -> &[DiscreteDistribution] {
        &self.components
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn kind(&self) -> PointKind {
        self.components[0].kind()
    }

    /// The mean distribution `E[P]`.
    pub fn mean(&self) -> DiscreteDistribution {
        DiscreteDistribution::average(self.probs.iter().copied().zip(&self.components))
    }
}

/// Finite joint distribution of a pair of random distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDiscreteMixture {
    pairs: Vec<(DiscreteDistribution, DiscreteDistribution)>,
    probs: Vec<f64>,
}

impl JointDiscreteMixture {
    pub fn new(
        pairs: Vec<(DiscreteDistribution, DiscreteDistribution)>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        if pairs.len() != probs.len() {
            return Err(Error::LengthMismatch {
                left: pairs.len(),
                right: probs.len(),
            });
        }
        check_simplex(&probs, "joint probabilities")?;
        common_kind(
            pairs
                .iter()
                .flat_map(|(p, q)| p.atoms.iter().chain(q.atoms.iter())),
        )?;
        Ok(JointDiscreteMixture { pairs, probs })
    }

    /// `(P, P)` for `P` drawn from `mix`.
    pub fn coupled(mix: &DiscreteMixture) -> Self {
        JointDiscreteMixture {
            pairs: mix
                .components
                .iter()
                .map(|c| (c.clone(), c.clone()))
                .collect(),
            probs: mix.probs.clone(),
        }
    }

    /// `(P, Q)` with `P ~ a` and `Q ~ b` independent.
    pub fn product(a: &DiscreteMixture, b: &DiscreteMixture) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut probs = Vec::new();
        for (p, pa) in a.components.iter().zip(&a.probs) {
            for (q, pb) in b.components.iter().zip(&b.probs) {
                pairs.push((p.clone(), q.clone()));
                probs.push(pa * pb);
            }
        }
        Self::new(pairs, probs)
    }

    pub fn pairs(&self) -> &[(DiscreteDistribution, DiscreteDistribution)] {
        &self.pairs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn kind(&self) -> PointKind {
        self.pairs[0].0.kind()
    }

    pub fn marginal_p(&self) -> DiscreteMixture {
        DiscreteMixture {
            components: self.pairs.iter().map(|(p, _)| p.clone()).collect(),
            probs: self.probs.clone(),
        }
    }

    pub fn marginal_q(&self) -> DiscreteMixture {
        DiscreteMixture {
            components: self.pairs.iter().map(|(_, q)| q.clone()).collect(),
            probs: self.probs.clone(),
        }
    }
}

/// `P - M` as a signed atom list.
fn centred<'a>(d: &'a DiscreteDistribution, mean: &'a DiscreteDistribution) -> Vec<(&'a Point, f64)> {
    let mut out: Vec<(&Point, f64)> = mean.atoms.iter().zip(&mean.weights).map(|(a, w)| (a, -w)).collect();
    for (a, w) in d.atoms.iter().zip(&d.weights) {
        match out.iter_mut().find(|(b, _)| *b == a) {
            Some((_, v)) => *v += w,
            None => out.push((a, *w)),
        }
    }
    out
}

fn signed_bilinear(spec: &KernelSpec, p: &[(&Point, f64)], q: &[(&Point, f64)]) -> Result<f64> {
    let mut acc = Accumulator::new();
    for (x, wp) in p {
        for (y, wq) in q {
            acc.add(wp * wq * eval_kernel(spec, x, y)?);
        }
    }
    Ok(acc.total())
}

/// `Var_k(P) = E⟨P - E P|k|P - E P⟩`. The centred form avoids the
/// cancellation in `E⟨P|k|P⟩ - ⟨E P|k|E P⟩` when the spread is small.
pub fn variance_exact(spec: &KernelSpec, mix: &DiscreteMixture) -> Result<f64> {
    let mean = mix.mean();
    let mut acc = Accumulator::new();
    for (c, p) in mix.components.iter().zip(&mix.probs) {
        let d = centred(c, &mean);
        acc.add(p * signed_bilinear(spec, &d, &d)?);
    }
    Ok(acc.total())
}

/// `Cov_k(P, Q) = E⟨P - E P|k|Q - E Q⟩`.
pub fn covariance_exact(spec: &KernelSpec, joint: &JointDiscreteMixture) -> Result<f64> {
    let mean_p = joint.marginal_p().mean();
    let mean_q = joint.marginal_q().mean();
    let mut acc = Accumulator::new();
    for ((p, q), w) in joint.pairs.iter().zip(&joint.probs) {
        acc.add(w * signed_bilinear(spec, &centred(p, &mean_p), &centred(q, &mean_q))?);
    }
    Ok(acc.total())
}

const DEGENERATE_TOL: f64 = 1e-12;

/// `Corr_k(P, Q) = Cov_k(P, Q) / sqrt(Var_k(P) Var_k(Q))`.
pub fn correlation_exact(spec: &KernelSpec, joint: &JointDiscreteMixture) -> Result<f64> {
    let var_p = variance_exact(spec, &joint.marginal_p())?;
    let var_q = variance_exact(spec, &joint.marginal_q())?;
    if var_p <= DEGENERATE_TOL || var_q <= DEGENERATE_TOL {
        return Err(Error::DegenerateMarginal { var_p, var_q });
    }
    Ok(covariance_exact(spec, joint)? / (var_p * var_q).sqrt())
}

/// Exact noise, bias and variance of the expected kernel score of a random
/// prediction drawn from `predictive` against targets drawn from `target`.
///
/// The identity residual compares `noise + bias + variance` with the
/// expected score summed directly over components and target atoms.
pub fn decompose_exact(
    spec: &KernelSpec,
    predictive: &DiscreteMixture,
    target: &DiscreteDistribution,
) -> Result<DecompositionReport> {
    if predictive.kind() != target.kind() {
        return Err(Error::MixedKinds {
            left: predictive.kind(),
            right: target.kind(),
        });
    }
    let mean = predictive.mean();
    let q_norm = bilinear(spec, target, target)?;
    let noise = -q_norm;
    let bias = bilinear(spec, &mean, &mean)? - 2.0 * bilinear(spec, &mean, target)? + q_norm;
    let variance = variance_exact(spec, predictive)?;
    let kernel_score = noise + bias + variance;

    let mut direct = Accumulator::new();
    let mut expected_norm = Accumulator::new();
    for (c, p) in predictive.components.iter().zip(&predictive.probs) {
        expected_norm.add(p * bilinear(spec, c, c)?);
        for (y, q) in target.atoms.iter().zip(&target.weights) {
            direct.add(p * q * kernel_score_exact(spec, c, y)?);
        }
    }

    Ok(DecompositionReport {
        noise: Some(noise),
        bias: Some(bias),
        variance,
        covariance: None,
        correlation: None,
        entropy: -expected_norm.total(),
        kernel_score,
        mmd2: Some(kernel_score + q_norm),
        identity_residual: Some((kernel_score - direct.total()).abs()),
        n: predictive.components.len(),
        cluster_sizes: Vec::new(),
        target_size: target.support_size(),
        kernel: spec.clone(),
        flags: Vec::new(),
    })
}

/// Expected kernel score summed directly, `Σ_i π_i Σ_y q_y S_k(P_i, y)`.
pub fn expected_score_direct(
    spec: &KernelSpec,
    predictive: &DiscreteMixture,
    target: &DiscreteDistribution,
) -> Result<f64> {
    let mut acc = Accumulator::new();
    for (c, p) in predictive.components.iter().zip(&predictive.probs) {
        for (y, q) in target.atoms.iter().zip(&target.weights) {
            acc.add(p * q * kernel_score_exact(spec, c, y)?);
        }
    }
    Ok(acc.total())
}

/// Brier score `Σ_i (P_i - 1{i = y})²` of a categorical forecast.
pub fn brier_score(probs: &[f64], y: usize) -> f64 {
    sum::sum(probs.iter().enumerate().map(|(i, p)| {
        let e = p - if i == y { 1.0 } else { 0.0 };
        e * e
    }))
}

/// Ensemble members drawn identically but not necessarily independently.
///
/// A latent state `z` is drawn with probability `latent_probs[z]`; given `z`,
/// each member independently picks component `c` with probability
/// `conditional[z][c]`. A single latent state gives iid members.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeableMembers {
    components: Vec<DiscreteDistribution>,
    latent_probs: Vec<f64>,
    conditional: Vec<Vec<f64>>,
}

impl ExchangeableMembers {
    pub fn new(
        components: Vec<DiscreteDistribution>,
        latent_probs: Vec<f64>,
        conditional: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_simplex(&latent_probs, "latent probabilities")?;
        if conditional.len() != latent_probs.len() {
            return Err(Error::LengthMismatch {
                left: conditional.len(),
                right: latent_probs.len(),
            });
        }
        for row in &conditional {
            if row.len() != components.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: components.len(),
                });
            }
            check_simplex(row, "conditional probabilities")?;
        }
        common_kind(components.iter().flat_map(|c| c.atoms.iter()))?;
        Ok(ExchangeableMembers {
            components,
            latent_probs,
            conditional,
        })
    }

    /// Independent members, each drawn from `mix`.
    pub fn iid(mix: &DiscreteMixture) -> Self {
        ExchangeableMembers {
            components: mix.components.clone(),
            latent_probs: vec![1.0],
            conditional: vec![mix.probs.clone()],
        }
    }

    /// Distribution of a single member.
    pub fn member(&self) -> DiscreteMixture {
        let probs = (0..self.components.len())
            .map(|c| {
                sum::sum(
                    self.latent_probs
                        .iter()
                        .zip(&self.conditional)
                        .map(|(z, row)| z * row[c]),
                )
            })
            .collect();
        DiscreteMixture {
            components: self.components.clone(),
            probs,
        }
    }

    /// Joint distribution of two distinct members.
    pub fn pair(&self) -> JointDiscreteMixture {
        let k = self.components.len();
        let mut pairs = Vec::with_capacity(k * k);
        let mut probs = Vec::with_capacity(k * k);
        for a in 0..k {
            for b in 0..k {
                pairs.push((self.components[a].clone(), self.components[b].clone()));
                probs.push(sum::sum(
                    self.latent_probs
                        .iter()
                        .zip(&self.conditional)
                        .map(|(z, row)| z * row[a] * row[b]),
                ));
            }
        }
        JointDiscreteMixture { pairs, probs }
    }

    /// Distribution of the `n`-member average `(P_1 + ... + P_n) / n`,
    /// enumerated over every latent state and member assignment.
    pub fn ensemble(&self, n: usize) -> Result<DiscreteMixture> {
        if n == 0 {
            return Err(Error::InvalidParameter("ensemble size must be >= 1".into()));
        }
        let k = self.components.len();
        let states = (self.latent_probs.len() as u128).saturating_mul(
            (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX),
        );
        if states > MAX_ENSEMBLE_STATES {
            return Err(Error::TooManyStates {
                states,
                cap: MAX_ENSEMBLE_STATES,
            });
        }
        let share = 1.0 / n as f64;
        let mut components = Vec::new();
        let mut probs = Vec::new();
        let mut assignment = vec![0usize; n];
        for (z, row) in self.latent_probs.iter().zip(&self.conditional) {
            loop {
                let p = assignment.iter().fold(*z, |acc, &c| acc * row[c]);
                components.push(DiscreteDistribution::average(
                    assignment.iter().map(|&c| (share, &self.components[c])),
                ));
                probs.push(p);
                // odometer increment
                let mut pos = 0;
                while pos < n {
                    assignment[pos] += 1;
                    if assignment[pos] < k {
                        break;
                    }
                    assignment[pos] = 0;
                    pos += 1;
                }
                if pos == n {
                    break;
                }
            }
        }
        Ok(DiscreteMixture { components, probs })
    }
}

/// Joint of binary categorical distributions, each given by the probability
/// of the first class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryJoint {
    pub pairs: Vec<(f64, f64)>,
    pub probs: Vec<f64>,
}

/// Returns `(Corr_kδ(P, Q), Pearson correlation of (P_1, Q_1))`.
///
/// For two classes `Cov_kδ(P, Q) = 2 Cov(P_1, Q_1)`, so the two agree.
pub fn pearson_reduction_check(joint: &BinaryJoint) -> Result<(f64, f64)> {
    if joint.pairs.len() != joint.probs.len() {
        return Err(Error::LengthMismatch {
            left: joint.pairs.len(),
            right: joint.probs.len(),
        });
    }
    check_simplex(&joint.probs, "joint probabilities")?;
    let pairs = joint
        .pairs
        .iter()
        .map(|&(p, q)| {
            Ok((
                DiscreteDistribution::categorical(&[p, 1.0 - p])?,
                DiscreteDistribution::categorical(&[q, 1.0 - q])?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let kernel_corr =
        correlation_exact(&KernelSpec::delta(), &JointDiscreteMixture::new(pairs, joint.probs.clone())?)?;

    let w = &joint.probs;
    let mean_p = sum::sum(w.iter().zip(&joint.pairs).map(|(w, (p, _))| w * p));
    let mean_q = sum::sum(w.iter().zip(&joint.pairs).map(|(w, (_, q))| w * q));
    let cov = sum::sum(
        w.iter()
            .zip(&joint.pairs)
            .map(|(w, (p, q))| w * (p - mean_p) * (q - mean_q)),
    );
    let var_p = sum::sum(w.iter().zip(&joint.pairs).map(|(w, (p, _))| w * (p - mean_p).powi(2)));
    let var_q = sum::sum(w.iter().zip(&joint.pairs).map(|(w, (_, q))| w * (q - mean_q).powi(2)));
    Ok((kernel_corr, cov / (var_p * var_q).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(t: u32) -> Point {
        Point::Tokens(vec![t])
    }

    fn mass(t: u32) -> DiscreteDistribution {
        DiscreteDistribution::point_mass(tok(t))
    }

    #[test]
    fn bilinear_fixtures() {
        let k = KernelSpec::delta();
        assert_eq!(bilinear(&k, &mass(0), &mass(0)).unwrap(), 1.0);
        let uni = DiscreteDistribution::uniform(vec![tok(0), tok(1)]).unwrap();
        assert_eq!(bilinear(&k, &uni, &mass(0)).unwrap(), 0.5);
        let p = DiscreteDistribution::new(vec![tok(0), tok(1)], vec![0.3, 0.7]).unwrap();
        assert!((bilinear(&k, &p, &p).unwrap() - 0.58).abs() < 1e-15);
    }

    #[test]
    fn duplicate_atoms_merge() {
        let d = DiscreteDistribution::new(vec![tok(0), tok(1), tok(0)], vec![0.25, 0.5, 0.25])
            .unwrap();
        assert_eq!(d.atoms(), &[tok(0), tok(1)]);
        assert_eq!(d.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn invalid_weights() {
        assert!(DiscreteDistribution::new(vec![tok(0)], vec![0.9]).is_err());
        assert!(DiscreteDistribution::new(vec![tok(0), tok(1)], vec![1.5, -0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![tok(0)], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMixture::new(vec![mass(0)], vec![0.5]).is_err());
    }

    #[test]
    fn variance_fixtures() {
        let k = KernelSpec::delta();
        assert_eq!(variance_exact(&k, &DiscreteMixture::deterministic(mass(0))).unwrap(), 0.0);
        let mix = DiscreteMixture::new(vec![mass(0), mass(1)], vec![0.5, 0.5]).unwrap();
        assert_eq!(variance_exact(&k, &mix).unwrap(), 0.5);
        let cov = covariance_exact(&k, &JointDiscreteMixture::coupled(&mix)).unwrap();
        assert_eq!(cov, 0.5);
    }

    #[test]
    fn covariance_fixtures() {
        let k = KernelSpec::delta();
        let a = DiscreteMixture::new(vec![mass(0), mass(1)], vec![0.3, 0.7]).unwrap();
        let b = DiscreteMixture::new(vec![mass(1), mass(2)], vec![0.6, 0.4]).unwrap();
        let prod = JointDiscreteMixture::product(&a, &b).unwrap();
        assert!(covariance_exact(&k, &prod).unwrap().abs() < 1e-12);

        let anti = JointDiscreteMixture::new(
            vec![(mass(0), mass(1)), (mass(1), mass(0))],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(covariance_exact(&k, &anti).unwrap(), -0.5);
        assert_eq!(correlation_exact(&k, &anti).unwrap(), -1.0);
    }

    #[test]
    fn correlation_fixtures() {
        let k = KernelSpec::delta();
        let a = DiscreteMixture::new(vec![mass(0), mass(1)], vec![0.3, 0.7]).unwrap();
        let c = correlation_exact(&k, &JointDiscreteMixture::coupled(&a)).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        let prod = JointDiscreteMixture::product(&a, &a).unwrap();
        assert!(correlation_exact(&k, &prod).unwrap().abs() < 1e-12);

        let det = DiscreteMixture::deterministic(mass(0));
        assert!(matches!(
            correlation_exact(&k, &JointDiscreteMixture::product(&det, &a).unwrap()),
            Err(Error::DegenerateMarginal { .. })
        ));
    }

    #[test]
    fn optimal_prediction_has_no_bias_or_variance() {
        let k = KernelSpec::delta();
        let q = DiscreteDistribution::new(vec![tok(0), tok(1)], vec![0.25, 0.75]).unwrap();
        let r = decompose_exact(&k, &DiscreteMixture::deterministic(q.clone()), &q).unwrap();
        assert!(r.bias.unwrap().abs() < 1e-15);
        assert_eq!(r.variance, 0.0);
        assert_eq!(r.kernel_score, r.noise.unwrap() + r.bias.unwrap());
        assert!(r.identity_residual.unwrap() < 1e-15);
    }

    #[test]
    fn brier_binary_case() {
        let k = KernelSpec::delta();
        for &(p1, y) in &[(0.2, 0usize), (0.9, 1), (0.5, 0)] {
            let p = DiscreteDistribution::categorical(&[p1, 1.0 - p1]).unwrap();
            let s = kernel_score_exact(&k, &p, &tok(y as u32)).unwrap();
            let one = if y == 0 { 1.0 } else { 0.0 };
            assert!((s + 1.0 - 2.0 * (p1 - one) * (p1 - one)).abs() < 1e-15);
            assert!((s + 1.0 - brier_score(&[p1, 1.0 - p1], y)).abs() < 1e-15);
        }
    }

    #[test]
    fn ensemble_enumeration() {
        let k = KernelSpec::delta();
        let mix = DiscreteMixture::new(vec![mass(0), mass(1)], vec![0.5, 0.5]).unwrap();
        let members = ExchangeableMembers::iid(&mix);
        let ens = members.ensemble(2).unwrap();
        assert_eq!(ens.components().len(), 4);
        // iid members: the average of two halves the variance.
        assert!((variance_exact(&k, &ens).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(members.ensemble(17), Err(Error::TooManyStates { .. })));
    }

    #[test]
    fn pearson_reduction_fixtures() {
        let coupled = BinaryJoint {
            pairs: vec![(0.2, 0.2), (0.7, 0.7)],
            probs: vec![0.4, 0.6],
        };
        let (a, b) = pearson_reduction_check(&coupled).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);

        let product = BinaryJoint {
            pairs: vec![(0.2, 0.1), (0.2, 0.6), (0.7, 0.1), (0.7, 0.6)],
            probs: vec![0.25, 0.25, 0.25, 0.25],
        };
        let (a, b) = pearson_reduction_check(&product).unwrap();
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
    }
}
