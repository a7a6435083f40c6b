//! Classification metrics: exact-match accuracy, per-class precision /
//! recall / F1 with macro averaging over the classes present in the gold
//! labels, and a paired bootstrap test for accuracy differences.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Metrics for one gold class.
#[derive(Debug, Clone, Serialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of gold samples carrying this label.
    pub support: usize,
}

/// Accuracy plus macro-averaged precision/recall/F1. Macro values are
/// unweighted means over the classes that appear in the gold labels;
/// classes that appear only in predictions contribute false positives but
/// no row of their own.
#[derive(Debug, Clone, Serialize)]
pub struct MacroReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// Computes [`MacroReport`] from parallel prediction and gold slices.
/// Empty denominators follow the usual zero convention: a class never
/// predicted has precision 0, and F1 is 0 whenever precision + recall is.
pub fn macro_report(predictions: &[String], golds: &[String]) -> Result<MacroReport> {
    if predictions.len() != golds.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions against {} golds",
            predictions.len(),
            golds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::InvalidInput("no samples to score".into()));
    }
    let n = golds.len() as f64;
    let matches = predictions
        .iter()
        .zip(golds)
        .filter(|(p, g)| p == g)
        .count();
    let classes: BTreeSet<&str> = golds.iter().map(String::as_str).collect();

    let mut per_class = Vec::with_capacity(classes.len());
    for class in classes {
        let tp = predictions
            .iter()
            .zip(golds)
            .filter(|(p, g)| p.as_str() == class && g.as_str() == class)
            .count() as f64;
        let predicted = predictions.iter().filter(|p| p.as_str() == class).count() as f64;
        let support = golds.iter().filter(|g| g.as_str() == class).count();
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = tp / support as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            label: class.to_string(),
            precision,
            recall,
            f1,
            support,
        });
    }
    let k = per_class.len() as f64;
    Ok(MacroReport {
        accuracy: matches as f64 / n,
        precision: per_class.iter().map(|c| c.precision).sum::<f64>() / k,
        recall: per_class.iter().map(|c| c.recall).sum::<f64>() / k,
        f1: per_class.iter().map(|c| c.f1).sum::<f64>() / k,
        per_class,
    })
}

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

/// Paired bootstrap test on accuracy. The observed effect is
/// acc_a - acc_b; indices are resampled with replacement `resamples`
/// times, and the p-value is the fraction of resampled effects at least
/// twice the observed one. When the two systems agree everywhere the
/// effect is 0 and every resample clears the doubled threshold, giving
/// p = 1; a real difference pushes p toward 0.
pub fn bootstrap_significance(
    preds_a: &[String],
    preds_b: &[String],
    golds: &[String],
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    if preds_a.len() != golds.len() || preds_b.len() != golds.len() {
        return Err(Error::InvalidInput(format!(
            "prediction lengths {} and {} against {} golds",
            preds_a.len(),
            preds_b.len(),
            golds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::InvalidInput("no samples to resample".into()));
    }
    if resamples == 0 {
        return Err(Error::InvalidParameter(
            "bootstrap needs at least 1 resample".into(),
        ));
    }
    let n = golds.len();
    let hits_a: Vec<f64> = preds_a
        .iter()
        .zip(golds)
        .map(|(p, g)| if p == g { 1.0 } else { 0.0 })
        .collect();
    let hits_b: Vec<f64> = preds_b
        .iter()
        .zip(golds)
        .map(|(p, g)| if p == g { 1.0 } else { 0.0 })
        .collect();
    let observed = (hits_a.iter().sum::<f64>() - hits_b.iter().sum::<f64>()) / n as f64;

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut exceed = 0usize;
    for _ in 0..resamples {
        let mut delta = 0.0;
        for _ in 0..n {
            let i = rng.random_range(0..n);
            delta += hits_a[i] - hits_b[i];
        }
        if delta / n as f64 >= 2.0 * observed {
            exceed += 1;
        }
    }
    Ok(exceed as f64 / resamples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        let golds = strs(&["a", "b", "c", "a"]);
        let report = macro_report(&golds, &golds).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.precision, 1.0);
        assert_eq!(report.recall, 1.0);
        assert_eq!(report.f1, 1.0);
        assert_eq!(report.per_class.len(), 3);
    }

    /// Hand-checked confusion matrix: golds AABB, predictions ABBB.
    #[test]
    fn two_class_example_matches_hand_computation() {
        let golds = strs(&["a", "a", "b", "b"]);
        let preds = strs(&["a", "b", "b", "b"]);
        let report = macro_report(&preds, &golds).unwrap();
        assert_eq!(report.accuracy, 0.75);
        let a = &report.per_class[0];
        assert_eq!(a.precision, 1.0);
        assert_eq!(a.recall, 0.5);
        assert!((a.f1 - 2.0 / 3.0).abs() < 1e-15);
        let b = &report.per_class[1];
        assert!((b.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.recall, 1.0);
        assert!((b.f1 - 0.8).abs() < 1e-15);
        assert!((report.f1 - 11.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn all_wrong_predictions_score_zero() {
        let golds = strs(&["a", "a", "b", "b"]);
        let preds = strs(&["b", "b", "a", "a"]);
        let report = macro_report(&preds, &golds).unwrap();
        assert_eq!(report.accuracy, 0.0);
        assert_eq!(report.f1, 0.0);
    }

    /// A label seen only in predictions gets no class row, but its false
    /// positives still hurt the gold classes through missed recalls.
    #[test]
    fn prediction_only_classes_are_not_averaged() {
        let golds = strs(&["a", "a", "b"]);
        let preds = strs(&["a", "ghost", "b"]);
        let report = macro_report(&preds, &golds).unwrap();
        assert_eq!(report.per_class.len(), 2);
        assert!(report.per_class.iter().all(|c| c.label != "ghost"));
        assert!((report.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(report.per_class[0].recall, 0.5);
    }

    #[test]
    fn report_rejects_mismatched_or_empty_inputs() {
        assert!(macro_report(&strs(&["a"]), &strs(&["a", "b"])).is_err());
        assert!(macro_report(&[], &[]).is_err());
    }

    #[test]
    fn identical_systems_are_not_significant() {
        let golds = strs(&["a", "b", "a", "b", "a", "b"]);
        let preds = strs(&["a", "b", "b", "b", "a", "a"]);
        let p = bootstrap_significance(&preds, &preds, &golds, 2000, 5).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn extreme_separation_is_significant() {
        let golds: Vec<String> = (0..100).map(|i| format!("c{}", i % 2)).collect();
        let perfect = golds.clone();
        let wrong: Vec<String> = (0..100).map(|i| format!("c{}", (i + 1) % 2)).collect();
        let p = bootstrap_significance(&perfect, &wrong, &golds, 10_000, 6).unwrap();
        assert!(p < 0.001, "p = {p}");
    }

    #[test]
    fn p_value_is_deterministic_and_bounded() {
        let golds: Vec<String> = (0..40).map(|i| format!("c{}", i % 4)).collect();
        let preds_a: Vec<String> = golds
            .iter()
            .enumerate()
            .map(|(i, g)| if i % 5 == 0 { "x".into() } else { g.clone() })
            .collect();
        let preds_b: Vec<String> = golds
            .iter()
            .enumerate()
            .map(|(i, g)| if i % 3 == 0 { "x".into() } else { g.clone() })
            .collect();
        let p1 = bootstrap_significance(&preds_a, &preds_b, &golds, 5000, 7).unwrap();
        let p2 = bootstrap_significance(&preds_a, &preds_b, &golds, 5000, 7).unwrap();
        assert_eq!(p1, p2);
        assert!((0.0..=1.0).contains(&p1));
    }

    /// Widening the accuracy gap between the two systems can only shrink
    /// the p-value on a fixed seed.
    #[test]
    fn p_value_decreases_as_separation_grows() {
        let golds: Vec<String> = (0..100).map(|i| format!("c{}", i % 2)).collect();
        let perfect = golds.clone();
        let mut last = f64::INFINITY;
        for wrong_count in [0usize, 10, 25, 50, 90] {
            let preds_b: Vec<String> = golds
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    if i < wrong_count {
                        "wrong".to_string()
                    } else {
                        g.clone()
                    }
                })
                .collect();
            let p = bootstrap_significance(&perfect, &preds_b, &golds, 4000, 8).unwrap();
            assert!(
                p <= last,
                "separation {wrong_count}: p {p} rose above {last}"
            );
            last = p;
        }
    }

    #[test]
    fn bootstrap_validates_inputs() {
        let golds = strs(&["a", "b"]);
        assert!(bootstrap_significance(&strs(&["a"]), &golds, &golds, 10, 0).is_err());
        assert!(bootstrap_significance(&golds, &golds, &golds, 0, 0).is_err());
        assert!(bootstrap_significance(&[], &[], &[], 10, 0).is_err());
    }
}
