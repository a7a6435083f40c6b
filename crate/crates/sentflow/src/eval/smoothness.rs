//! Interpolation smoothness: how directly a decoded path moves from its
//! first sentence to its last. The score per path is the end-to-end
//! semantic distance divided by the summed distances of consecutive steps,
//! so 1 means the path never wanders and smaller values mean detours. The
//! default semantic distance is an exact minimum-cost assignment between
//! the two sentences' slot-prototype multisets, padded with zero vectors
//! when the sentences have different lengths.

use serde::Serialize;

use crate::corpus::{SentenceStructure, SynthCorpus};
use crate::error::{Error, Result};
use crate::linalg::{euclidean_distance, Mat};

/// Summary of per-path smoothness scores.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessStats {
    pub avg_is: f64,
    pub max_is: f64,
    pub min_is: f64,
    /// Number of paths aggregated.
    pub paths: usize,
}

/// Exact minimum-cost assignment over a square cost matrix.
///
/// Returns the optimal total cost and, per row, the column it is matched
/// to. Runs the classic potential/augmenting-path scheme in O(n^3).
pub fn assignment_cost(costs: &Mat) -> Result<(f64, Vec<usize>)> {
    let n = costs.rows();
    if n == 0 || costs.cols() != n {
        return Err(Error::InvalidInput(format!(
            "assignment needs a square nonempty cost matrix, got {}x{}",
            costs.rows(),
            costs.cols()
        )));
    }
    Error::check_finite(costs.as_slice(), "assignment costs")?;

    // 1-based arrays; index 0 is the virtual unmatched column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let slack = costs.get(i0 - 1, j - 1) - u[i0] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        let row = matched_row[j] - 1;
        assignment[row] = j - 1;
        total += costs.get(row, j - 1);
    }
    Ok((total, assignment))
}

/// Semantic distance between two sentences: the cheapest way to match
/// their slot prototypes one-to-one, with unmatched slots paying the
/// distance from their prototype to the origin.
pub fn prototype_assignment_distance(
    corpus: &SynthCorpus,
    a: &SentenceStructure,
    b: &SentenceStructure,
) -> Result<f64> {
    let dim = corpus.spec().dim;
    let zero = vec![0.0; dim];
    let collect = |s: &SentenceStructure| -> Result<Vec<Vec<f64>>> {
        s.slots()
            .iter()
            .map(|slot| Ok(corpus.prototype(&slot.role, &slot.content)?.to_vec()))
            .collect()
    };
    let mut tokens_a = collect(a)?;
    let mut tokens_b = collect(b)?;
    let n = tokens_a.len().max(tokens_b.len());
    tokens_a.resize(n, zero.clone());
    tokens_b.resize(n, zero);

    let mut costs = Mat::zeros(n, n);
    for (i, ta) in tokens_a.iter().enumerate() {
        for (j, tb) in tokens_b.iter().enumerate() {
            costs.set(i, j, euclidean_distance(ta, tb));
        }
    }
    Ok(assignment_cost(&costs)?.0)
}

/// Aggregates the smoothness score over decoded paths using a caller-chosen
/// semantic distance. Each path needs at least two sentences; a path whose
/// steps all have distance zero is stationary and scores 1 when the
/// endpoints agree too, while nonzero end-to-end distance over zero steps
/// means the distance is not a metric and is rejected.
pub fn interpolation_smoothness<D>(
    paths: &[Vec<SentenceStructure>],
    mut delta: D,
) -> Result<SmoothnessStats>
where
    D: FnMut(&SentenceStructure, &SentenceStructure) -> Result<f64>,
{
    if paths.is_empty() {
        return Err(Error::InvalidInput("no paths to score".into()));
    }
    let mut checked = |a: &SentenceStructure, b: &SentenceStructure| -> Result<f64> {
        let d = delta(a, b)?;
        if !d.is_finite() || d < 0.0 {
            return Err(Error::InvalidInput(format!(
                "semantic distance must be finite and nonnegative, got {d}"
            )));
        }
        Ok(d)
    };

    let mut sum = 0.0;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for (idx, path) in paths.iter().enumerate() {
        if path.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "path {idx} has {} sentences, need at least 2",
                path.len()
            )));
        }
        let direct = checked(&path[0], &path[path.len() - 1])?;
        let mut stepped = 0.0;
        for pair in path.windows(2) {
            stepped += checked(&pair[0], &pair[1])?;
        }
        let score = if stepped == 0.0 {
            if direct > 0.0 {
                return Err(Error::InvalidInput(format!(
                    "path {idx}: steps sum to zero but the endpoints are {direct} \
                     apart; the distance violates the triangle inequality"
                )));
            }
            1.0
        } else {
            direct / stepped
        };
        sum += score;
        max = max.max(score);
        min = min.min(score);
    }
    Ok(SmoothnessStats {
        avg_is: sum / paths.len() as f64,
        max_is: max,
        min_is: min,
        paths: paths.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{default_spec, small_spec};
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    fn brute_force_assignment(costs: &Mat) -> f64 {
        fn recurse(costs: &Mat, row: usize, taken: &mut Vec<bool>, acc: f64, best: &mut f64) {
            let n = costs.rows();
            if row == n {
                *best = best.min(acc);
                return;
            }
            for col in 0..n {
                if !taken[col] {
                    taken[col] = true;
                    recurse(costs, row + 1, taken, acc + costs.get(row, col), best);
                    taken[col] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        recurse(costs, 0, &mut vec![false; costs.cols()], 0.0, &mut best);
        best
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha20Rng::seed_from_u64(51);
        for n in 1..=6 {
            for _ in 0..25 {
                let mut costs = Mat::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        costs.set(i, j, rng.random::<f64>() * 10.0);
                    }
                }
                let (total, assignment) = assignment_cost(&costs).unwrap();
                let expected = brute_force_assignment(&costs);
                assert!(
                    (total - expected).abs() < 1e-9,
                    "n={n}: {total} vs brute force {expected}"
                );
                // The returned assignment is a permutation achieving the total.
                let mut seen = vec![false; n];
                let mut replay = 0.0;
                for (row, &col) in assignment.iter().enumerate() {
                    assert!(!seen[col]);
                    seen[col] = true;
                    replay += costs.get(row, col);
                }
                assert!((replay - total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_diagonal_is_matched_identically() {
        let mut costs = Mat::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                costs.set(i, j, if i == j { 0.0 } else { 1.0 + (i + j) as f64 });
            }
        }
        let (total, assignment) = assignment_cost(&costs).unwrap();
        assert_eq!(total, 0.0);
        assert_eq!(assignment, vec![0, 1, 2, 3]);
    }

    #[test]
    fn assignment_rejects_bad_matrices() {
        assert!(assignment_cost(&Mat::zeros(0, 0)).is_err());
        assert!(assignment_cost(&Mat::zeros(2, 3)).is_err());
        let mut nan = Mat::zeros(2, 2);
        nan.set(0, 0, f64::NAN);
        assert!(assignment_cost(&nan).is_err());
    }

    #[test]
    fn prototype_distance_is_zero_on_self_and_symmetric() {
        let corpus = SynthCorpus::build(small_spec(52)).unwrap();
        let candidates = corpus.candidates();
        let mut rng = ChaCha20Rng::seed_from_u64(53);
        for _ in 0..40 {
            let a = &candidates[rng.random_range(0..candidates.len())].0;
            let b = &candidates[rng.random_range(0..candidates.len())].0;
            let d_ab = prototype_assignment_distance(&corpus, a, b).unwrap();
            let d_ba = prototype_assignment_distance(&corpus, b, a).unwrap();
            assert!((d_ab - d_ba).abs() <= 1e-12 * (1.0 + d_ab.abs()));
            assert!(d_ab >= 0.0);
            let d_aa = prototype_assignment_distance(&corpus, a, a).unwrap();
            assert_eq!(d_aa, 0.0);
        }
    }

    /// Unequal sentence lengths are handled by padding with the origin:
    /// for a one-slot vs two-slot pair the cost is the better of the two
    /// ways to leave a slot unmatched, computable by hand.
    #[test]
    fn padding_cost_matches_hand_computation() {
        let corpus = SynthCorpus::build(default_spec(54)).unwrap();
        let one = SentenceStructure::from_pairs(&[("ARG0", "human")]).unwrap();
        let two =
            SentenceStructure::from_pairs(&[("ARG0", "animal"), ("V", "is")]).unwrap();
        let p = corpus.prototype("ARG0", "human").unwrap();
        let q1 = corpus.prototype("ARG0", "animal").unwrap();
        let q2 = corpus.prototype("V", "is").unwrap();
        let zero = vec![0.0; p.len()];
        let option_a = euclidean_distance(p, q1) + euclidean_distance(&zero, q2);
        let option_b = euclidean_distance(p, q2) + euclidean_distance(&zero, q1);
        let expected = option_a.min(option_b);
        let got = prototype_assignment_distance(&corpus, &one, &two).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn two_point_paths_score_exactly_one() {
        let corpus = SynthCorpus::build(small_spec(55)).unwrap();
        let a = corpus.candidates()[0].0.clone();
        let b = corpus.candidates()[3].0.clone();
        let stats = interpolation_smoothness(&[vec![a, b]], |x, y| {
            prototype_assignment_distance(&corpus, x, y)
        })
        .unwrap();
        assert_eq!(stats.avg_is, 1.0);
        assert_eq!(stats.max_is, 1.0);
        assert_eq!(stats.min_is, 1.0);
    }

    /// Under the uniform metric (1 between distinct sentences) a
    /// three-sentence detour is twice as long as the direct hop.
    #[test]
    fn detour_halves_the_score() {
        let corpus = SynthCorpus::build(small_spec(56)).unwrap();
        let path: Vec<SentenceStructure> = corpus
            .candidates()
            .iter()
            .take(3)
            .map(|(s, _)| s.clone())
            .collect();
        let stats = interpolation_smoothness(&[path], |x, y| {
            Ok(if x.key() == y.key() { 0.0 } else { 1.0 })
        })
        .unwrap();
        assert_eq!(stats.avg_is, 0.5);
    }

    #[test]
    fn stationary_paths_score_one_by_convention() {
        let corpus = SynthCorpus::build(small_spec(57)).unwrap();
        let s = corpus.candidates()[0].0.clone();
        let stats = interpolation_smoothness(&[vec![s.clone(), s.clone(), s]], |x, y| {
            prototype_assignment_distance(&corpus, x, y)
        })
        .unwrap();
        assert_eq!(stats.avg_is, 1.0);
    }

    /// Zero on every consecutive step but nonzero end to end cannot happen
    /// for a metric; the aggregator refuses rather than dividing by zero.
    #[test]
    fn non_metric_distance_is_rejected() {
        let corpus = SynthCorpus::build(small_spec(58)).unwrap();
        let a = corpus.candidates()[0].0.clone();
        let b = corpus.candidates()[1].0.clone();
        let c = corpus.candidates()[2].0.clone();
        let ends = [a.key(), c.key()];
        let bad = interpolation_smoothness(&[vec![a, b, c]], |x, y| {
            let is_end_pair = (x.key() == ends[0] && y.key() == ends[1])
                || (x.key() == ends[1] && y.key() == ends[0]);
            Ok(if is_end_pair { 2.0 } else { 0.0 })
        });
        assert!(matches!(bad, Err(Error::InvalidInput(_))));
        // Negative distances are rejected outright.
        let a2 = corpus.candidates()[0].0.clone();
        let b2 = corpus.candidates()[1].0.clone();
        let neg = interpolation_smoothness(&[vec![a2, b2]], |_, _| Ok(-1.0));
        assert!(matches!(neg, Err(Error::InvalidInput(_))));
    }

    /// With a true metric the direct distance can never exceed the summed
    /// step distances, so the score stays in (0, 1] on paths with distinct
    /// endpoints.
    #[test]
    fn metric_scores_never_exceed_one() {
        let corpus = SynthCorpus::build(small_spec(59)).unwrap();
        let candidates = corpus.candidates();
        let mut rng = ChaCha20Rng::seed_from_u64(60);
        let mut paths = Vec::new();
        for _ in 0..50 {
            let len = rng.random_range(3..=6);
            let path: Vec<SentenceStructure> = (0..len)
                .map(|_| candidates[rng.random_range(0..candidates.len())].0.clone())
                .collect();
            if path[0].key() != path[len - 1].key() {
                paths.push(path);
            }
        }
        let stats = interpolation_smoothness(&paths, |x, y| {
            prototype_assignment_distance(&corpus, x, y)
        })
        .unwrap();
        assert!(stats.max_is <= 1.0 + 1e-12, "max {}", stats.max_is);
        assert!(stats.min_is > 0.0);
        assert!(stats.min_is <= stats.avg_is && stats.avg_is <= stats.max_is);
        assert_eq!(stats.paths, paths.len());
    }

    #[test]
    fn rejects_empty_and_short_paths() {
        let corpus = SynthCorpus::build(small_spec(61)).unwrap();
        let s = corpus.candidates()[0].0.clone();
        let d = |x: &SentenceStructure, y: &SentenceStructure| {
            prototype_assignment_distance(&corpus, x, y)
        };
        assert!(interpolation_smoothness(&[], d).is_err());
        assert!(interpolation_smoothness(&[vec![s]], d).is_err());
    }
}
