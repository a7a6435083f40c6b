//! Grouping sentences into supervision clusters keyed by one role's content.

use std::collections::BTreeMap;

use crate::corpus::EmbeddedSentence;
use crate::error::{Error, Result};
use crate::train::ClusterSpec;
use crate::LatentVector;

/// Groups the dataset by the key role's content and emits one spec per
/// group with the coordinate-wise mean vector as its centre. Sentences
/// without the key role are excluded. Group members are summed in id order,
/// so the result is independent of dataset ordering.
pub fn compute_cluster_specs(
    dataset: &[EmbeddedSentence],
    key_role: &str,
    sigma2: f64,
) -> Result<Vec<ClusterSpec>> {
    let mut groups: BTreeMap<&str, Vec<&EmbeddedSentence>> = BTreeMap::new();
    for s in dataset {
        if let Some(content) = s.structure.content_of(key_role) {
            groups.entry(content).or_default().push(s);
        }
    }
    if groups.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no sentence carries the key role {key_role}"
        )));
    }
    let dim = groups.values().next().unwrap()[0].vector.dim();
    let mut out = Vec::with_capacity(groups.len());
    for (content, mut members) in groups {
        members.sort_by(|a, b| a.id.cmp(&b.id));
        let mut acc = vec![0.0; dim];
        for m in &members {
            if m.vector.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: format!("cluster member {}", m.id),
                    expected: dim,
                    got: m.vector.dim(),
                });
            }
            for (a, b) in acc.iter_mut().zip(m.vector.as_slice()) {
                *a += b;
            }
        }
        let inv = 1.0 / members.len() as f64;
        for a in &mut acc {
            *a *= inv;
        }
        out.push(ClusterSpec::new(
            key_role.to_string(),
            content.to_string(),
            LatentVector::new(acc)?,
            sigma2,
        )?);
    }
    Ok(out)
}

/// Cluster index per sentence against an ordered cluster list, for handing
/// a labelled dataset to the trainer. Sentences missing the key role get
/// `None`.
pub fn cluster_assignments(
    dataset: &[EmbeddedSentence],
    specs: &[ClusterSpec],
) -> Vec<Option<usize>> {
    dataset
        .iter()
        .map(|s| {
            specs.iter().position(|spec| {
                s.structure.content_of(&spec.role) == Some(spec.content.as_str())
            })
        })
        .collect()
}
