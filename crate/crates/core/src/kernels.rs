//! Kernels on dense vectors and token sequences.
//!
//! | kind             | k(x, y)                                    | domain    |
//! |------------------|--------------------------------------------|-----------|
//! | `rbf`            | exp(-γ ‖x - y‖²₂)                          | vectors   |
//! | `laplacian`      | exp(-γ ‖x - y‖₁)                           | vectors   |
//! | `polynomial`     | ((⟨x, y⟩ + offset) / scale)^degree         | vectors   |
//! | `linear`         | ⟨x, y⟩                                     | vectors   |
//! | `cosine`         | ⟨x, y⟩ / (‖x‖ ‖y‖)                         | vectors   |
//! | `delta`          | 1 if x = y else 0                          | both      |
//! | `cs_subsequence` | normalized count of shared length-t windows | sequences |
//!
//! γ and the polynomial scale default to `1/d` and `d`, where `d` is the
//! vector dimension. [`KernelSpec::resolve`] pins those defaults for a
//! concrete point set so reports can echo the effective values.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = u32;

/// A single generation: an embedding vector or a token sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Dense(Vec<f64>),
    Tokens(Vec<TokenId>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Dense,
    Tokens,
}

impl fmt::Display for PointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointKind::Dense => f.write_str("dense vector"),
            PointKind::Tokens => f.write_str("token sequence"),
        }
    }
}

impl Point {
    /// Dense point, rejecting NaN and infinite coordinates.
    pub fn dense(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point::Dense(values))
    }

    pub fn kind(&self) -> PointKind {
        match self {
            Point::Dense(_) => PointKind::Dense,
            Point::Tokens(_) => PointKind::Tokens,
        }
    }

    /// Vector dimension or sequence length.
    pub fn len(&self) -> usize {
        match self {
            Point::Dense(v) => v.len(),
            Point::Tokens(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Checks that all points share one kind and returns it.
pub(crate) fn common_kind<'a>(points: impl IntoIterator<Item = &'a Point>) -> Result<PointKind> {
    let mut iter = points.into_iter();
    let first = iter.next().ok_or(Error::Empty)?.kind();
    for p in iter {
        if p.kind() != first {
            return Err(Error::MixedKinds {
                left: first,
                right: p.kind(),
            });
        }
    }
    Ok(first)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    Rbf {
        gamma: Option<f64>,
    },
    Laplacian {
        gamma: Option<f64>,
    },
    Polynomial {
        degree: u32,
        offset: f64,
        scale: Option<f64>,
    },
    Delta,
    Linear,
    Cosine,
    CsSubsequence {
        t: usize,
    },
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Rbf { .. } => "rbf",
            KernelKind::Laplacian { .. } => "laplacian",
            KernelKind::Polynomial { .. } => "polynomial",
            KernelKind::Delta => "delta",
            KernelKind::Linear => "linear",
            KernelKind::Cosine => "cosine",
            KernelKind::CsSubsequence { .. } => "cs_subsequence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub kind: KernelKind,
    /// Zero-pad the shorter of two vectors instead of rejecting the pair.
    #[serde(default)]
    pub pad_to_max: bool,
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Result<Self> {
        let spec = KernelSpec {
            kind,
            pad_to_max: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn infallible(kind: KernelKind) -> Self {
        KernelSpec {
            kind,
            pad_to_max: false,
        }
    }

    /// RBF kernel with γ = 1/d.
    pub fn rbf_default() -> Self {
        Self::infallible(KernelKind::Rbf { gamma: None })
    }

    pub fn rbf(gamma: f64) -> Result<Self> {
        Self::new(KernelKind::Rbf { gamma: Some(gamma) })
    }

    /// Laplacian kernel with γ = 1/d.
    pub fn laplacian_default() -> Self {
        Self::infallible(KernelKind::Laplacian { gamma: None })
    }

    pub fn laplacian(gamma: f64) -> Result<Self> {
        Self::new(KernelKind::Laplacian { gamma: Some(gamma) })
    }

    /// `((⟨x, y⟩ + 1) / d)^3`.
    pub fn polynomial_default() -> Self {
        Self::infallible(KernelKind::Polynomial {
            degree: 3,
            offset: 1.0,
            scale: None,
        })
    }

    pub fn polynomial(degree: u32, offset: f64, scale: f64) -> Result<Self> {
        Self::new(KernelKind::Polynomial {
            degree,
            offset,
            scale: Some(scale),
        })
    }

    pub fn delta() -> Self {
        Self::infallible(KernelKind::Delta)
    }

    pub fn linear() -> Self {
        Self::infallible(KernelKind::Linear)
    }

    pub fn cosine() -> Self {
        Self::infallible(KernelKind::Cosine)
    }

    pub fn cs_subsequence(t: usize) -> Result<Self> {
        Self::new(KernelKind::CsSubsequence { t })
    }

    pub fn with_pad_to_max(mut self, pad: bool) -> Self {
        self.pad_to_max = pad;
        self
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |what: &str, v: Option<f64>| match v {
            Some(g) if !(g.is_finite() && g > 0.0) => Err(Error::InvalidParameter(format!(
                "{what} must be a positive finite number, got {g}"
            ))),
            _ => Ok(()),
        };
        match &self.kind {
            KernelKind::Rbf { gamma } | KernelKind::Laplacian { gamma } => {
                positive("gamma", *gamma)
            }
            KernelKind::Polynomial {
                degree,
                offset,
                scale,
            } => {
                if *degree == 0 {
                    return Err(Error::InvalidParameter("degree must be >= 1".into()));
                }
                if !offset.is_finite() {
                    return Err(Error::InvalidParameter("offset must be finite".into()));
                }
                positive("scale", *scale)
            }
            KernelKind::CsSubsequence { t } => {
                if *t == 0 {
                    return Err(Error::InvalidParameter("t must be >= 1".into()));
                }
                Ok(())
            }
            KernelKind::Delta | KernelKind::Linear | KernelKind::Cosine => Ok(()),
        }
    }

    /// Whether the kernel is known to be positive semi-definite on its
    /// domain. Cosine similarity is accepted as a similarity measure but not
    /// certified; polynomial kernels with negative offset are not p.s.d.
    pub fn is_certified_psd(&self) -> bool {
        match &self.kind {
            KernelKind::Cosine => false,
            KernelKind::Polynomial { offset, .. } => *offset >= 0.0,
            _ => true,
        }
    }

    /// Replaces defaulted parameters with their values for dimension `dim`.
    pub fn resolve(&self, dim: usize) -> KernelSpec {
        let d = dim.max(1) as f64;
        let kind = match &self.kind {
            KernelKind::Rbf { gamma } => KernelKind::Rbf {
                gamma: Some(gamma.unwrap_or(1.0 / d)),
            },
            KernelKind::Laplacian { gamma } => KernelKind::Laplacian {
                gamma: Some(gamma.unwrap_or(1.0 / d)),
            },
            KernelKind::Polynomial {
                degree,
                offset,
                scale,
            } => KernelKind::Polynomial {
                degree: *degree,
                offset: *offset,
                scale: Some(scale.unwrap_or(d)),
            },
            other => other.clone(),
        };
        KernelSpec {
            kind,
            pad_to_max: self.pad_to_max,
        }
    }

    /// Resolves defaults against the largest vector dimension in `points`.
    /// Token points leave the spec unchanged.
    pub fn resolve_for<'a>(&self, points: impl IntoIterator<Item = &'a Point>) -> KernelSpec {
        let dim = points
            .into_iter()
            .filter_map(|p| match p {
                Point::Dense(v) => Some(v.len()),
                Point::Tokens(_) => None,
            })
            .max();
        match dim {
            Some(d) => self.resolve(d),
            None => self.clone(),
        }
    }

    /// Evaluates the kernel on one pair. See [`eval_kernel`].
    pub fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        eval_kernel(self, x, y)
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Iterates over coordinate pairs, zero-padding the shorter vector.
fn padded<'a>(x: &'a [f64], y: &'a [f64]) -> impl Iterator<Item = (f64, f64)> + 'a {
    let n = x.len().max(y.len());
    (0..n).map(move |i| {
        (
            x.get(i).copied().unwrap_or(0.0),
            y.get(i).copied().unwrap_or(0.0),
        )
    })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    // Padding contributes zeros to a dot product.
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == b.len() {
        a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
    } else {
        padded(a, b).map(|(u, v)| (u - v) * (u - v)).sum()
    }
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == b.len() {
        a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum()
    } else {
        padded(a, b).map(|(u, v)| (u - v).abs()).sum()
    }
}

/// Kernel value on two finite vectors whose lengths are already known to be
/// compatible with the spec.
fn dense_value(kind: &KernelKind, a: &[f64], b: &[f64]) -> Result<f64> {
    let d = a.len().max(b.len()).max(1) as f64;
    let value = match kind {
        KernelKind::Rbf { gamma } => (-gamma.unwrap_or(1.0 / d) * squared_distance(a, b)).exp(),
        KernelKind::Laplacian { gamma } => (-gamma.unwrap_or(1.0 / d) * l1_distance(a, b)).exp(),
        KernelKind::Polynomial {
            degree,
            offset,
            scale,
        } => ((dot(a, b) + offset) / scale.unwrap_or(d)).powi(*degree as i32),
        KernelKind::Linear => dot(a, b),
        KernelKind::Cosine => {
            let na = dot(a, a).sqrt();
            let nb = dot(b, b).sqrt();
            if na == 0.0 || nb == 0.0 {
                log::warn!("cosine similarity with a zero vector, using 0");
                0.0
            } else {
                dot(a, b) / (na * nb)
            }
        }
        KernelKind::Delta => indicator(if a.len() == b.len() {
            a == b
        } else {
            padded(a, b).all(|(u, v)| u == v)
        }),
        KernelKind::CsSubsequence { .. } => {
            return Err(Error::KindMismatch {
                kernel: kind.name(),
                found: PointKind::Dense,
            })
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite)
    }
}

/// `Some(vectors)` when every point is a finite dense vector and every pair
/// has compatible lengths, so pairs can skip per-call validation.
fn trusted_dense<'a>(spec: &KernelSpec, points: impl Iterator<Item = &'a Point>) -> Option<Vec<&'a [f64]>> {
    let mut out = Vec::new();
    for p in points {
        match p {
            Point::Dense(v) if v.iter().all(|x| x.is_finite()) => {
                if !spec.pad_to_max && out.first().is_some_and(|f: &&[f64]| f.len() != v.len()) {
                    return None;
                }
                out.push(v.as_slice());
            }
            _ => return None,
        }
    }
    if matches!(spec.kind, KernelKind::CsSubsequence { .. }) {
        return None;
    }
    Some(out)
}

/// Evaluates `spec` on the pair `(x, y)`.
///
/// The result is bit-identical for `(x, y)` and `(y, x)`.
pub fn eval_kernel(spec: &KernelSpec, x: &Point, y: &Point) -> Result<f64> {
    if x.kind() != y.kind() {
        return Err(Error::MixedKinds {
            left: x.kind(),
            right: y.kind(),
        });
    }
    match (&spec.kind, x, y) {
        (KernelKind::CsSubsequence { t }, Point::Tokens(a), Point::Tokens(b)) => {
            Ok(eval_cs_kernel(*t, a, b))
        }
        (KernelKind::Delta, Point::Tokens(a), Point::Tokens(b)) => Ok(indicator(a == b)),
        (KernelKind::CsSubsequence { .. }, Point::Dense(_), _) => Err(Error::KindMismatch {
            kernel: spec.name(),
            found: PointKind::Dense,
        }),
        (kind, Point::Dense(a), Point::Dense(b)) => {
            check_finite(a)?;
            check_finite(b)?;
            if a.len() != b.len() && !spec.pad_to_max {
                return Err(Error::DimensionMismatch {
                    left: a.len(),
                    right: b.len(),
                });
            }
            dense_value(kind, a, b)
        }
        (kind, _, _) => Err(Error::KindMismatch {
            kernel: kind.name(),
            found: x.kind(),
        }),
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Unnormalized contiguous-subsequence kernel: the number of position pairs
/// `(i, j)` with `x[i..i+t] == y[j..j+t]`.
pub fn cs_count(t: usize, x: &[TokenId], y: &[TokenId]) -> u64 {
    if t == 0 || x.len() < t || y.len() < t {
        return 0;
    }
    let mut counts: HashMap<&[TokenId], u64> = HashMap::new();
    for w in x.windows(t) {
        *counts.entry(w).or_default() += 1;
    }
    y.windows(t)
        .map(|w| counts.get(w).copied().unwrap_or(0))
        .sum()
}

fn cs_self_count(t: usize, x: &[TokenId]) -> u64 {
    if t == 0 || x.len() < t {
        return 0;
    }
    let mut counts: HashMap<&[TokenId], u64> = HashMap::new();
    for w in x.windows(t) {
        *counts.entry(w).or_default() += 1;
    }
    counts.values().map(|c| c * c).sum()
}

/// Normalized contiguous-subsequence kernel `k_t(x,y) / sqrt(k_t(x,x) k_t(y,y))`.
///
/// Sequences shorter than `t` have no windows and get similarity 0.
pub fn eval_cs_kernel(t: usize, x: &[TokenId], y: &[TokenId]) -> f64 {
    let xx = cs_self_count(t, x);
    let yy = cs_self_count(t, y);
    if xx == 0 || yy == 0 {
        return 0.0;
    }
    let xy = cs_count(t, x, y);
    if xy == 0 {
        return 0.0;
    }
    // Multiply before the root so the pair order cannot change rounding.
    xy as f64 / ((xx as f64) * (yy as f64)).sqrt()
}

/// Symmetric matrix of pairwise kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
    kernel: KernelSpec,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Builds a Gram matrix from explicit row-major values.
    pub fn from_values(n: usize, values: Vec<f64>, kernel: KernelSpec) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n}x{n} matrix",
                values.len()
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::AsymmetricInput { i, j });
                }
            }
        }
        Ok(GramMatrix { n, values, kernel })
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| ((i + 1)..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.values)
    }
}

/// Evaluates `spec` on pairs `(xs[i], ys[j])`, validating every point once up
/// front when possible. Errors name the offending pair.
pub(crate) struct PairEval<'a> {
    spec: &'a KernelSpec,
    xs: &'a [Point],
    ys: &'a [Point],
    trusted: Option<Vec<&'a [f64]>>,
}

impl<'a> PairEval<'a> {
    pub(crate) fn new(spec: &'a KernelSpec, xs: &'a [Point], ys: &'a [Point]) -> Result<Self> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::Empty);
        }
        common_kind(xs.iter().chain(ys))?;
        Ok(PairEval {
            spec,
            xs,
            ys,
            trusted: trusted_dense(spec, xs.iter().chain(ys)),
        })
    }

    pub(crate) fn eval(&self, i: usize, j: usize) -> Result<f64> {
        let value = match &self.trusted {
            Some(v) => dense_value(&self.spec.kind, v[i], v[self.xs.len() + j]),
            None => eval_kernel(self.spec, &self.xs[i], &self.ys[j]),
        };
        value.map_err(|e| Error::AtPair {
            i,
            j,
            source: Box::new(e),
        })
    }
}

const PARALLEL_ROWS: usize = 64;

/// Gram matrix of `points`. Each unordered pair is evaluated once and
/// mirrored, so the result is exactly symmetric.
pub fn gram(spec: &KernelSpec, points: &[Point]) -> Result<GramMatrix> {
    let pairs = PairEval::new(spec, points, points)?;
    let n = points.len();
    let upper_row = |i: usize| -> Result<Vec<f64>> { (i..n).map(|j| pairs.eval(i, j)).collect() };
    let rows: Vec<Vec<f64>> = if n >= PARALLEL_ROWS {
        (0..n).into_par_iter().map(upper_row).collect::<Result<_>>()?
    } else {
        (0..n).map(upper_row).collect::<Result<_>>()?
    };
    let mut values = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + offset;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(GramMatrix {
        n,
        values,
        kernel: spec.clone(),
    })
}

/// Rectangular matrix `k(xs[i], ys[j])`, row-major.
pub fn cross_gram(spec: &KernelSpec, xs: &[Point], ys: &[Point]) -> Result<Vec<f64>> {
    let pairs = PairEval::new(spec, xs, ys)?;
    let row = |i: usize| -> Result<Vec<f64>> { (0..ys.len()).map(|j| pairs.eval(i, j)).collect() };
    let rows: Vec<Vec<f64>> = if xs.len() * ys.len() >= PARALLEL_ROWS * PARALLEL_ROWS {
        (0..xs.len()).into_par_iter().map(row).collect::<Result<_>>()?
    } else {
        (0..xs.len()).map(row).collect::<Result<_>>()?
    };
    Ok(rows.concat())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// Smallest eigenvalue of `g` and whether it is at least `-tol`.
pub fn check_psd(g: &GramMatrix, tol: f64) -> PsdCheck {
    let eig = SymmetricEigen::new(g.to_dmatrix());
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    PsdCheck {
        is_psd: min_eigenvalue >= -tol,
        min_eigenvalue,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(v: &[f64]) -> Point {
        Point::Dense(v.to_vec())
    }

    #[test]
    fn rbf_self_similarity_is_one() {
        let spec = KernelSpec::rbf(1.0).unwrap();
        let x = dense(&[0.3, -1.2]);
        assert_eq!(eval_kernel(&spec, &x, &x).unwrap(), 1.0);
    }

    #[test]
    fn laplacian_fixture() {
        let spec = KernelSpec::laplacian(0.5).unwrap();
        let v = eval_kernel(&spec, &dense(&[0.0, 0.0]), &dense(&[2.0, 2.0])).unwrap();
        assert!((v - 0.135_335_283_236_612_7).abs() < 1e-15);
    }

    #[test]
    fn delta_distinct_points() {
        let v = eval_kernel(
            &KernelSpec::delta(),
            &dense(&[1.0, 0.0, 0.0]),
            &dense(&[0.0, 1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn polynomial_matches_formula() {
        let spec = KernelSpec::polynomial(3, 1.0, 784.0).unwrap();
        let v = eval_kernel(&spec, &dense(&[2.0, 3.0]), &dense(&[4.0, 5.0])).unwrap();
        assert_eq!(v, (24.0f64 / 784.0).powi(3));
    }

    #[test]
    fn default_gamma_is_inverse_dimension() {
        let x = dense(&[0.0; 4]);
        let y = dense(&[1.0; 4]);
        let v = eval_kernel(&KernelSpec::rbf_default(), &x, &y).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        let resolved = KernelSpec::rbf_default().resolve_for([&x, &y]);
        assert_eq!(resolved.kind, KernelKind::Rbf { gamma: Some(0.25) });
    }

    #[test]
    fn dimension_mismatch_without_padding() {
        let spec = KernelSpec::laplacian(1.0).unwrap();
        let err = eval_kernel(&spec, &dense(&[1.0]), &dense(&[1.0, 2.0])).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { left: 1, right: 2 });
    }

    #[test]
    fn padding_treats_missing_coordinates_as_zero() {
        let spec = KernelSpec::laplacian(1.0).unwrap().with_pad_to_max(true);
        let short = eval_kernel(&spec, &dense(&[1.0]), &dense(&[1.0, 2.0])).unwrap();
        let long = eval_kernel(&spec, &dense(&[1.0, 0.0]), &dense(&[1.0, 2.0])).unwrap();
        assert_eq!(short, long);
    }

    #[test]
    fn kind_errors() {
        let cs = KernelSpec::cs_subsequence(2).unwrap();
        assert!(matches!(
            eval_kernel(&cs, &dense(&[1.0]), &dense(&[1.0])),
            Err(Error::KindMismatch { .. })
        ));
        let toks = Point::Tokens(vec![1, 2]);
        assert!(matches!(
            eval_kernel(&KernelSpec::rbf_default(), &toks, &toks),
            Err(Error::KindMismatch { .. })
        ));
        assert!(matches!(
            eval_kernel(&KernelSpec::delta(), &toks, &dense(&[1.0])),
            Err(Error::MixedKinds { .. })
        ));
    }

    #[test]
    fn non_finite_rejected() {
        let spec = KernelSpec::rbf(1.0).unwrap();
        let bad = Point::Dense(vec![f64::NAN]);
        assert_eq!(
            eval_kernel(&spec, &bad, &dense(&[0.0])).unwrap_err(),
            Error::NonFinite
        );
        assert_eq!(Point::dense(vec![f64::INFINITY]).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn cosine_zero_vector_is_zero() {
        let v = eval_kernel(&KernelSpec::cosine(), &dense(&[0.0, 0.0]), &dense(&[1.0, 0.0]));
        assert_eq!(v.unwrap(), 0.0);
        assert!(!KernelSpec::cosine().is_certified_psd());
    }

    #[test]
    fn invalid_parameters() {
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::laplacian(-1.0).is_err());
        assert!(KernelSpec::polynomial(0, 1.0, 1.0).is_err());
        assert!(KernelSpec::cs_subsequence(0).is_err());
    }

    #[test]
    fn cs_kernel_fixtures() {
        let (a, b, c) = (0, 1, 2);
        let v = eval_cs_kernel(2, &[a, b, a, b], &[a, b]);
        assert!((v - 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(cs_count(2, &[a, b, a, b], &[a, b]), 2);
        assert_eq!(cs_count(2, &[a, b, a, b], &[a, b, a, b]), 5);
        assert_eq!(eval_cs_kernel(2, &[a, b, c], &[a, b, c]), 1.0);
        assert_eq!(eval_cs_kernel(3, &[a, b], &[a, b]), 0.0);
        assert_eq!(eval_cs_kernel(1, &[], &[a]), 0.0);
    }

    #[test]
    fn gram_fixtures() {
        let g = gram(&KernelSpec::rbf(1.0).unwrap(), &[dense(&[0.0]), dense(&[0.0])]).unwrap();
        assert_eq!(g.row(0), &[1.0, 1.0]);
        assert_eq!(g.row(1), &[1.0, 1.0]);

        let pts = [dense(&[1.0]), dense(&[2.0]), dense(&[1.0])];
        let g = gram(&KernelSpec::delta(), &pts).unwrap();
        assert_eq!(g.row(0), &[1.0, 0.0, 1.0]);
        assert_eq!(g.row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(g.row(2), &[1.0, 0.0, 1.0]);

        let g = gram(&KernelSpec::laplacian(1.0).unwrap(), &[dense(&[0.0]), dense(&[1.0])])
            .unwrap();
        let e = (-1.0f64).exp();
        assert_eq!(g.row(0), &[1.0, e]);
        assert_eq!(g.row(1), &[e, 1.0]);
    }

    #[test]
    fn gram_reports_offending_pair() {
        let pts = [dense(&[0.0]), dense(&[0.0]), dense(&[0.0, 1.0])];
        let err = gram(&KernelSpec::rbf(1.0).unwrap(), &pts).unwrap_err();
        assert!(matches!(err, Error::AtPair { i: 0, j: 2, .. }));
    }

    #[test]
    fn psd_fixtures() {
        let id = GramMatrix::from_values(2, vec![1.0, 0.0, 0.0, 1.0], KernelSpec::linear()).unwrap();
        let r = check_psd(&id, 1e-9);
        assert!(r.is_psd);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-12);

        let m = GramMatrix::from_values(2, vec![1.0, 2.0, 2.0, 1.0], KernelSpec::linear()).unwrap();
        let r = check_psd(&m, 1e-9);
        assert!(!r.is_psd);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn from_values_rejects_asymmetry() {
        let err = GramMatrix::from_values(2, vec![1.0, 0.5, 0.4, 1.0], KernelSpec::linear())
            .unwrap_err();
        assert_eq!(err, Error::AsymmetricInput { i: 0, j: 1 });
    }
}
