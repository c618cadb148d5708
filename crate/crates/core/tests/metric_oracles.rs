//! Metric implementations against first-principles recomputation.

mod common;

use common::{brute_force_kappa_f, pairwise_auc, trapezoid_auc};
use puffin_sentiment::corpus::Label;
use puffin_sentiment::evalkit::{auc, f_measure, kappa, ConfusionMatrix};
use puffin_sentiment::rng;
use rand::Rng;

#[test]
fn kappa_and_f_match_brute_force() {
    let mut r = rng::stream(0, "oracle", 0);
    let mut checked = 0;
    while checked < 1000 {
        let cm = ConfusionMatrix::new(
            r.random_range(0..=100),
            r.random_range(0..=100),
            r.random_range(0..=100),
            r.random_range(0..=100),
        );
        if cm.total() == 0 {
            continue;
        }
        let (k, f) = brute_force_kappa_f(&cm);
        assert!((kappa(&cm).unwrap() - k).abs() <= 1e-12, "{cm:?}");
        assert!((f_measure(&cm).unwrap() - f).abs() <= 1e-12, "{cm:?}");
        checked += 1;
    }
}

#[test]
fn auc_equals_trapezoidal_roc_area() {
    let mut r = rng::stream(0, "oracle", 1);
    for n in 2..=12 {
        for _ in 0..200 {
            // Coarse scores so ties are common.
            let scores: Vec<f64> = (0..n).map(|_| r.random_range(0..6) as f64 / 5.0).collect();
            let labels: Vec<Label> = (0..n).map(|_| Label::from_index(r.random_range(0..2))).collect();
            if !(labels.contains(&Label::Positive) && labels.contains(&Label::Negative)) {
                continue;
            }
            let a = auc(&scores, &labels).unwrap();
            assert!((a - trapezoid_auc(&scores, &labels)).abs() <= 1e-12);
            assert!((a - pairwise_auc(&scores, &labels)).abs() <= 1e-12);
        }
    }
}
