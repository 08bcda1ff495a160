mod common;

use kscore_core::evaluate::{
    auroc, auroc_oriented, binarize_loss, lcs_len, lexical_similarity, pearson, rouge_l, Orientation,
};
use proptest::prelude::*;

fn seq(max: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..4, 0..=max)
}

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..=50).prop_flat_map(|k| {
        (
            prop::collection::vec((0u8..8).prop_map(|v| v as f64 * 0.125), k),
            prop::collection::vec(0u8..=1, k),
        )
    })
}

proptest! {
    #[test]
    fn rouge_matches_subset_enumeration(s in seq(10), t in seq(10)) {
        prop_assert_eq!(lcs_len(&s, &t), common::brute_lcs(&s, &t));
        prop_assert_eq!(rouge_l(&s, &t), common::brute_rouge_l(&s, &t));
        prop_assert_eq!(rouge_l(&s, &t), rouge_l(&t, &s));
    }

    #[test]
    fn auroc_matches_pair_counting((scores, labels) in scored_labels()) {
        let pos = labels.iter().filter(|&&l| l == 1).count();
        prop_assume!(pos > 0 && pos < labels.len());
        let a = auroc(&scores, &labels).unwrap();
        prop_assert!((a - common::brute_auroc(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn auroc_is_invariant_to_monotone_maps((scores, labels) in scored_labels()) {
        let pos = labels.iter().filter(|&&l| l == 1).count();
        prop_assume!(pos > 0 && pos < labels.len());
        let mapped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert_eq!(auroc(&scores, &labels).unwrap(), auroc(&mapped, &labels).unwrap());
        let flipped = auroc_oriented(&scores, &labels, Orientation::UncertaintyPredictsError).unwrap();
        prop_assert!((flipped - (1.0 - auroc(&scores, &labels).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn binarization_is_monotone_in_threshold(s in seq(8), t in seq(8), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(binarize_loss(&s, &t, lo).unwrap() >= binarize_loss(&s, &t, hi).unwrap());
    }
}

#[test]
fn rouge_on_every_short_pair() {
    fn all(len: usize) -> Vec<Vec<u32>> {
        (0..3usize.pow(len as u32))
            .map(|mut code| {
                (0..len)
                    .map(|_| {
                        let d = (code % 3) as u32;
                        code /= 3;
                        d
                    })
                    .collect()
            })
            .collect()
    }
    let seqs: Vec<Vec<u32>> = (0..=4).flat_map(all).collect();
    for s in &seqs {
        for t in &seqs {
            assert_eq!(lcs_len(s, t), common::brute_lcs(s, t));
        }
    }
}

#[test]
fn auroc_fixture_and_strict_threshold() {
    assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
    let answer: Vec<u32> = (0..10).collect();
    let target = vec![0, 1, 2, 100, 101, 102, 103, 104, 105, 106];
    assert_eq!(rouge_l(&answer, &target), 0.3);
    assert_eq!(binarize_loss(&answer, &target, 0.3).unwrap(), 0);
    assert_eq!(binarize_loss(&answer, &target, 0.29).unwrap(), 1);
}

#[test]
fn lexical_similarity_and_pearson() {
    let gens = vec![vec![1u32, 2, 3], vec![1, 2, 3], vec![4, 5]];
    let expected = (1.0 + 0.0 + 0.0) / 3.0;
    assert!((lexical_similarity(&gens).unwrap() - expected).abs() < 1e-15);
    let x = [0.1, 0.5, 0.2, 0.9];
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
}
