//! Evaluation suite for latent disentanglement: stratified data splitting,
//! proxy classifiers over embedding regimes, round-trip label retention,
//! label retention along latent interpolations, path smoothness, and a
//! paired bootstrap test for accuracy differences.

pub mod classify;
pub mod metrics;
pub mod report;
pub mod smoothness;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::corpus::{EmbeddedSentence, SentenceStructure};
use crate::error::{Error, Result};
use crate::flow::FlowModel;
use crate::geometry::interpolate_path;
use crate::train::shuffle_indices;
use crate::vector::LatentVector;

pub use classify::{Classifier, ClassifierKind};
pub use metrics::{
    bootstrap_significance, macro_report, ClassMetrics, MacroReport, BOOTSTRAP_RESAMPLES,
};
pub use report::{rows_to_csv, rows_to_json, ClassifierRow, Regime};
pub use smoothness::{
    assignment_cost, interpolation_smoothness, prototype_assignment_distance, SmoothnessStats,
};

pub const DEFAULT_TRAIN_RATIO: f64 = 0.6;
pub const DEFAULT_INVERTIBILITY_SAMPLES: usize = 100;

/// Stratified train/test split over parallel label slices.
///
/// Each class is shuffled separately and contributes round(ratio * size)
/// members to the training side, clamped so both sides keep at least one
/// member per class. Returned index lists are sorted ascending; together
/// they partition `0..labels.len()`.
pub fn split_train_test(
    labels: &[String],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train ratio must lie strictly inside (0, 1), got {ratio}"
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidInput("nothing to split".into()));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        groups.entry(label).or_default().push(i);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut members) in groups {
        if members.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "class {label} has {} sample(s); stratified splitting needs \
                 at least 2 per class",
                members.len()
            )));
        }
        shuffle_indices(&mut members, &mut rng);
        let n = members.len();
        let take = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&members[..take]);
        test.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Fits every classifier kind on the train slice and scores it on the test
/// slice, in a fixed order.
pub fn classifier_suite(
    train_x: &[LatentVector],
    train_y: &[String],
    test_x: &[LatentVector],
    test_y: &[String],
) -> Result<Vec<(ClassifierKind, MacroReport)>> {
    let mut out = Vec::with_capacity(ClassifierKind::ALL.len());
    for kind in ClassifierKind::ALL {
        let model = Classifier::fit(kind, train_x, train_y)?;
        let preds: Vec<String> = test_x
            .iter()
            .map(|x| model.predict(x).map(str::to_string))
            .collect::<Result<_>>()?;
        out.push((kind, macro_report(&preds, test_y)?));
    }
    Ok(out)
}

/// Fraction of round-tripped samples whose decoded sentence keeps its
/// cluster label, per cluster.
///
/// Each sample is pushed through the flow and back (x -> z -> x'), decoded,
/// and counted as retained when the decoded sentence carries the same
/// content for `cluster_role` as the original. At most `per_cluster`
/// samples are drawn per cluster (seeded shuffle), matching the usual
/// protocol of scoring a fixed-size random subset.
pub fn invertibility_ratio<D>(
    model: &FlowModel,
    samples: &[EmbeddedSentence],
    cluster_role: &str,
    per_cluster: usize,
    seed: u64,
    mut decode: D,
) -> Result<BTreeMap<String, f64>>
where
    D: FnMut(&[f64]) -> Result<SentenceStructure>,
{
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to round-trip".into()));
    }
    if per_cluster == 0 {
        return Err(Error::InvalidParameter(
            "per-cluster sample size must be at least 1".into(),
        ));
    }
    let mut clusters: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let content = s.structure.content_of(cluster_role).ok_or_else(|| {
            Error::InvalidInput(format!("sample {} lacks role {cluster_role}", s.id))
        })?;
        clusters.entry(content).or_default().push(i);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut ratios = BTreeMap::new();
    for (content, mut members) in clusters {
        shuffle_indices(&mut members, &mut rng);
        members.truncate(per_cluster);
        let mut retained = 0usize;
        for &i in &members {
            let (z, _) = model.forward(&samples[i].vector)?;
            let (back, _) = model.inverse(&z)?;
            let decoded = decode(&back)?;
            if decoded.content_of(cluster_role) == Some(content) {
                retained += 1;
            }
        }
        ratios.insert(content.to_string(), retained as f64 / members.len() as f64);
    }
    Ok(ratios)
}

/// Label retention along latent-space interpolations, per interior step.
///
/// Every pair must share the same content for `shared_role`. Both
/// endpoints are lifted through the flow, the straight latent path is
/// sampled at t = step, 2*step, ..., each point is mapped back and
/// decoded, and position t scores the fraction of pairs whose decoded
/// sentence still carries the shared content.
pub fn localisation_ratio<D>(
    model: &FlowModel,
    pairs: &[(&EmbeddedSentence, &EmbeddedSentence)],
    shared_role: &str,
    step: f64,
    mut decode: D,
) -> Result<Vec<f64>>
where
    D: FnMut(&[f64]) -> Result<SentenceStructure>,
{
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs to interpolate".into()));
    }
    let mut counts: Vec<usize> = Vec::new();
    for (a, b) in pairs {
        let content = match (
            a.structure.content_of(shared_role),
            b.structure.content_of(shared_role),
        ) {
            (Some(x), Some(y)) if x == y => x,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "pair ({}, {}) does not share a content for role {shared_role}",
                    a.id, b.id
                )))
            }
        };
        let (z1, _) = model.forward(&a.vector)?;
        let (z2, _) = model.forward(&b.vector)?;
        let path = interpolate_path(&LatentVector::new(z1)?, &LatentVector::new(z2)?, step)?;
        if counts.is_empty() {
            counts = vec![0; path.len()];
        }
        for (t, point) in path.iter().enumerate() {
            let (back, _) = model.inverse(point.as_slice())?;
            let decoded = decode(&back)?;
            if decoded.content_of(shared_role) == Some(content) {
                counts[t] += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / pairs.len() as f64)
        .collect())
}
