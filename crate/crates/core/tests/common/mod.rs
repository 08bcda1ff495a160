//! Reference implementations written straight from the definitions, without
//! reusing any library code path. Slow on purpose.

#![allow(dead_code)]

use kscore_core::{DiscreteDistribution, Point};
use rand::Rng;

/// Number of matching length-`t` window pairs, by comparing every pair of
/// windows element by element.
pub fn brute_cs_count(t: usize, x: &[u32], y: &[u32]) -> u64 {
    if t == 0 || x.len() < t || y.len() < t {
        return 0;
    }
    let mut count = 0;
    for i in 0..=(x.len() - t) {
        for j in 0..=(y.len() - t) {
            if (0..t).all(|o| x[i + o] == y[j + o]) {
                count += 1;
            }
        }
    }
    count
}

pub fn brute_cs_kernel(t: usize, x: &[u32], y: &[u32]) -> f64 {
    let xx = brute_cs_count(t, x, x);
    let yy = brute_cs_count(t, y, y);
    if xx == 0 || yy == 0 {
        return 0.0;
    }
    brute_cs_count(t, x, y) as f64 / ((xx * yy) as f64).sqrt()
}

fn is_subsequence(needle: &[u32], hay: &[u32]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// LCS length by trying every subset of `s`.
pub fn brute_lcs(s: &[u32], t: &[u32]) -> usize {
    assert!(s.len() <= 20);
    let mut best = 0;
    for mask in 0u32..(1 << s.len()) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let sub: Vec<u32> = (0..s.len()).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect();
        if is_subsequence(&sub, t) {
            best = len;
        }
    }
    best
}

pub fn brute_rouge_l(s: &[u32], t: &[u32]) -> f64 {
    if s.is_empty() || t.is_empty() {
        return 0.0;
    }
    2.0 * brute_lcs(s, t) as f64 / (s.len() + t.len()) as f64
}

/// AUROC by counting every (positive, negative) pair.
pub fn brute_auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Delta kernel on single-token points, the only kernel several oracles need.
pub fn delta(a: &Point, b: &Point) -> f64 {
    f64::from(u8::from(a == b))
}

/// `Σ_a Σ_b p_a q_b k(a, b)`.
pub fn inner(k: &dyn Fn(&Point, &Point) -> f64, p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
    let mut total = 0.0;
    for (a, wa) in p.atoms().iter().zip(p.weights()) {
        for (b, wb) in q.atoms().iter().zip(q.weights()) {
            total += wa * wb * k(a, b);
        }
    }
    total
}

/// `‖P‖² - 2 Σ_a p_a k(a, y)`.
pub fn score(k: &dyn Fn(&Point, &Point) -> f64, p: &DiscreteDistribution, y: &Point) -> f64 {
    let cross: f64 = p.atoms().iter().zip(p.weights()).map(|(a, w)| w * k(a, y)).sum();
    inner(k, p, p) - 2.0 * cross
}

/// Brier score written out for a categorical forecast.
pub fn brier(probs: &[f64], y: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(i, p)| (p - if i == y { 1.0 } else { 0.0 }).powi(2))
        .sum()
}

/// Weighted Pearson correlation of paired scalars.
pub fn weighted_pearson(xs: &[f64], ys: &[f64], w: &[f64]) -> f64 {
    let mx: f64 = xs.iter().zip(w).map(|(x, w)| x * w).sum();
    let my: f64 = ys.iter().zip(w).map(|(y, w)| y * w).sum();
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(w) {
        sxy += w * (x - mx) * (y - my);
        sxx += w * (x - mx) * (x - mx);
        syy += w * (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Two-stage variance estimate from its defining sums: mean within-cluster
/// off-diagonal kernel value minus mean between-cluster kernel value.
pub fn naive_variance(k: &dyn Fn(&Point, &Point) -> f64, clusters: &[Vec<Point>]) -> f64 {
    let n = clusters.len();
    let mut within = 0.0;
    for c in clusters {
        let m = c.len();
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                if a != b {
                    s += k(&c[a], &c[b]);
                }
            }
        }
        within += s / (m * (m - 1)) as f64;
    }
    within / n as f64 - between(k, clusters, clusters)
}

fn between(k: &dyn Fn(&Point, &Point) -> f64, xs: &[Vec<Point>], ys: &[Vec<Point>]) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut s = 0.0;
            for a in &xs[i] {
                for b in &ys[j] {
                    s += k(a, b);
                }
            }
            total += s / (xs[i].len() * ys[j].len()) as f64;
        }
    }
    total / (n * (n - 1)) as f64
}

/// Two-stage covariance estimate: mean same-index cross kernel value minus
/// mean different-index cross kernel value.
pub fn naive_covariance(k: &dyn Fn(&Point, &Point) -> f64, xs: &[Vec<Point>], ys: &[Vec<Point>]) -> f64 {
    let n = xs.len();
    let mut same = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        for a in &xs[i] {
            for b in &ys[i] {
                s += k(a, b);
            }
        }
        same += s / (xs[i].len() * ys[i].len()) as f64;
    }
    same / n as f64 - between(k, xs, ys)
}

/// Uniformly random point on the probability simplex.
pub fn random_simplex<R: Rng>(rng: &mut R, l: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..l).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

pub fn tok(t: u32) -> Point {
    Point::Tokens(vec![t])
}

/// Random distribution over single tokens drawn from `0..alphabet`.
pub fn random_token_distribution<R: Rng>(rng: &mut R, alphabet: u32) -> DiscreteDistribution {
    let support = rng.random_range(1..=alphabet as usize);
    let mut atoms: Vec<u32> = (0..alphabet).collect();
    for i in 0..support {
        let j = rng.random_range(i..atoms.len());
        atoms.swap(i, j);
    }
    let weights = random_simplex(rng, support);
    DiscreteDistribution::new(atoms[..support].iter().map(|&a| tok(a)).collect(), weights).unwrap()
}

/// Random distribution over points of a small 2-d grid, so atoms repeat
/// exactly across components.
pub fn random_grid_distribution<R: Rng>(rng: &mut R) -> DiscreteDistribution {
    let support = rng.random_range(1..=4);
    let atoms = (0..support)
        .map(|_| {
            Point::Dense(vec![
                rng.random_range(-2i32..=2) as f64 * 0.5,
                rng.random_range(-2i32..=2) as f64 * 0.5,
            ])
        })
        .collect();
    DiscreteDistribution::new(atoms, random_simplex(rng, support)).unwrap()
}

pub fn random_mixture<R: Rng>(
    rng: &mut R,
    components: usize,
    mut draw: impl FnMut(&mut R) -> DiscreteDistribution,
) -> kscore_core::DiscreteMixture {
    let comps = (0..components).map(|_| draw(rng)).collect();
    kscore_core::DiscreteMixture::new(comps, random_simplex(rng, components)).unwrap()
}

/// Weighted atoms, duplicates allowed.
pub type Atoms = Vec<(Point, f64)>;

pub fn atoms_of(d: &DiscreteDistribution) -> Atoms {
    d.atoms().iter().cloned().zip(d.weights().iter().copied()).collect()
}

/// Combines equal atoms so long lists stay short and sums stay accurate.
pub fn merge_atoms(atoms: Atoms) -> Atoms {
    let mut out: Atoms = Vec::new();
    for (a, w) in atoms {
        match out.iter_mut().find(|(b, _)| *b == a) {
            Some((_, v)) => *v += w,
            None => out.push((a, w)),
        }
    }
    out
}

pub fn atoms_inner(k: &dyn Fn(&Point, &Point) -> f64, p: &Atoms, q: &Atoms) -> f64 {
    let mut total = 0.0;
    for (a, wa) in p {
        for (b, wb) in q {
            total += wa * wb * k(a, b);
        }
    }
    total
}

/// Variance of the average of `n` members. Members share a latent state
/// drawn from `latent`; given state `z`, each member picks component `c`
/// independently with probability `conditional[z][c]`. Every assignment is
/// enumerated and the averaged distribution kept as an atom list.
pub fn ensemble_variance_oracle(
    k: &dyn Fn(&Point, &Point) -> f64,
    components: &[DiscreteDistribution],
    latent: &[f64],
    conditional: &[Vec<f64>],
    n: usize,
) -> f64 {
    let comps: Vec<Atoms> = components.iter().map(atoms_of).collect();
    let c = comps.len();
    let mut second = 0.0;
    let mut mean: Atoms = Vec::new();
    for (z, row) in latent.iter().zip(conditional) {
        for code in 0..c.pow(n as u32) {
            let mut prob = *z;
            let mut avg: Atoms = Vec::new();
            let mut rest = code;
            for _ in 0..n {
                let pick = rest % c;
                rest /= c;
                prob *= row[pick];
                avg.extend(comps[pick].iter().map(|(a, w)| (a.clone(), w / n as f64)));
            }
            let avg = merge_atoms(avg);
            second += prob * atoms_inner(k, &avg, &avg);
            mean.extend(avg.into_iter().map(|(a, w)| (a, w * prob)));
        }
    }
    let mean = merge_atoms(mean);
    second - atoms_inner(k, &mean, &mean)
}
