//! Metrics for judging uncertainty scores against losses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum;

/// Length of the longest common (not necessarily contiguous) subsequence.
pub fn lcs_len<T: PartialEq>(s: &[T], t: &[T]) -> usize {
    if s.is_empty() || t.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; t.len() + 1];
    let mut cur = vec![0usize; t.len() + 1];
    for a in s {
        for (j, b) in t.iter().enumerate() {
            cur[j + 1] = if a == b {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[t.len()]
}

/// `2 LCS(s, t) / (|s| + |t|)`; 0 when either sequence is empty.
pub fn rouge_l<T: PartialEq>(s: &[T], t: &[T]) -> f64 {
    if s.is_empty() || t.is_empty() {
        return 0.0;
    }
    2.0 * lcs_len(s, t) as f64 / (s.len() + t.len()) as f64
}

pub const DEFAULT_THRESHOLD: f64 = 0.3;

/// 1 if `rouge_l(answer, target) > threshold` (strictly), else 0.
pub fn binarize_loss<T: PartialEq>(answer: &[T], target: &[T], threshold: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )));
    }
    Ok(u8::from(rouge_l(answer, target) > threshold))
}

/// Mean RougeL over unordered pairs of generations.
pub fn lexical_similarity<T: PartialEq>(generations: &[Vec<T>]) -> Result<f64> {
    let k = generations.len();
    if k < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: k });
    }
    let total = sum::sum(
        (0..k).flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
            .map(|(i, j)| rouge_l(&generations[i], &generations[j])),
    );
    Ok(total / (k * (k - 1) / 2) as f64)
}

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, ties counting one half.
///
/// Computed from midranks (Mann-Whitney U) in `O(k log k)`.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidParameter(format!("label {bad} is not 0 or 1")));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum keeps midranks integral.
    let mut twice_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end, midrank (start + 1 + end) / 2
        let twice_mid = (start + 1 + end) as u64;
        let tied_pos = order[start..end].iter().filter(|&&i| labels[i] == 1).count() as u64;
        twice_rank_sum += twice_mid * tied_pos;
        start = end;
    }
    let p = positives as u64;
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * positives * negatives) as f64)
}

/// Which way an uncertainty score is read when computing AUROC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Higher score means the answer is more likely wrong; AUROC is computed
    /// for the negated score against correctness.
    #[default]
    UncertaintyPredictsError,
    /// Higher score means the answer is more likely right.
    ConfidencePredictsCorrectness,
}

/// AUROC of an uncertainty (or confidence) score against binary correctness
/// (1 = correct). 1.0 means the score ranks every correct answer as more
/// certain than every incorrect one.
pub fn auroc_oriented(scores: &[f64], correct: &[u8], orientation: Orientation) -> Result<f64> {
    match orientation {
        Orientation::ConfidencePredictsCorrectness => auroc(scores, correct),
        Orientation::UncertaintyPredictsError => {
            let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
            auroc(&negated, correct)
        }
    }
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: x.len(),
        });
    }
    let k = x.len() as f64;
    let mx = sum::sum(x.iter().copied()) / k;
    let my = sum::sum(y.iter().copied()) / k;
    let sxy = sum::sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = sum::sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let syy = sum::sum(y.iter().map(|b| (b - my) * (b - my)));
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rouge_fixtures() {
        assert_eq!(rouge_l(&["a", "b", "c"], &["a", "b", "c"]), 1.0);
        assert_eq!(rouge_l(&["a", "b", "c"], &["a", "c"]), 0.8);
        assert_eq!(rouge_l(&["a", "b"], &["c", "d"]), 0.0);
        assert_eq!(rouge_l::<&str>(&[], &["a"]), 0.0);
    }

    #[test]
    fn binarize_fixtures() {
        assert_eq!(binarize_loss(&["a", "b", "c"], &["a", "c"], 0.3).unwrap(), 1);
        assert_eq!(binarize_loss(&["x"], &["x"], 0.3).unwrap(), 1);
        // 2 * 3 / 20 = 0.3 exactly, which does not clear the strict threshold.
        let answer: Vec<u32> = (0..10).collect();
        let target: Vec<u32> = vec![0, 1, 2, 100, 101, 102, 103, 104, 105, 106];
        assert_eq!(rouge_l(&answer, &target), 0.3);
        assert_eq!(binarize_loss(&answer, &target, 0.3).unwrap(), 0);
        assert!(binarize_loss(&["a"], &["a"], 1.5).is_err());
    }

    #[test]
    fn auroc_fixtures() {
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5; 4], &[0, 1, 0, 1]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.1, 0.2], &[1, 1]).unwrap_err(), Error::SingleClass);
    }

    #[test]
    fn orientation() {
        let uncertainty = [0.9, 0.6, 0.65, 0.2];
        let correct = [0, 0, 1, 1];
        let a = auroc_oriented(&uncertainty, &correct, Orientation::UncertaintyPredictsError).unwrap();
        assert_eq!(a, 0.75);
        let b = auroc_oriented(&[0.1, 0.4, 0.35, 0.8], &correct, Orientation::ConfidencePredictsCorrectness)
            .unwrap();
        assert_eq!(b, 0.75);
    }

    #[test]
    fn pearson_fixtures() {
        let x = [1.0, 2.0, 4.0, 7.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[1.0; 4]).unwrap_err(), Error::DegenerateVariance);
    }

    #[test]
    fn pearson_orthogonal_is_zero() {
        let x = [0.3, -1.2, 2.5, 0.7, 1.1];
        let z = [1.0, 0.5, -0.25, 2.0, -1.5];
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let xc: Vec<f64> = x.iter().map(|v| v - mean(&x)).collect();
        let zc: Vec<f64> = z.iter().map(|v| v - mean(&z)).collect();
        let proj = xc.iter().zip(&zc).map(|(a, b)| a * b).sum::<f64>()
            / xc.iter().map(|a| a * a).sum::<f64>();
        let y: Vec<f64> = zc.iter().zip(&xc).map(|(b, a)| b - proj * a).collect();
        assert!(pearson(&x, &y).unwrap().abs() < 1e-12);
    }

    #[test]
    fn lexical_fixtures() {
        let same = vec![vec!["a", "b"]; 3];
        assert_eq!(lexical_similarity(&same).unwrap(), 1.0);
        let disjoint = vec![vec!["a"], vec!["b"], vec!["c"]];
        assert_eq!(lexical_similarity(&disjoint).unwrap(), 0.0);
        let mixed = vec![vec!["a", "b"], vec!["a", "c"], vec!["a", "b"]];
        assert!((lexical_similarity(&mixed).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(lexical_similarity(&[vec!["a"]]).is_err());
    }
}
