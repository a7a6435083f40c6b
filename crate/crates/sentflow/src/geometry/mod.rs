//! Latent-space geometric operators: straight-line interpolation, midpoint
//! averaging, per-dimension quantile traversal, and the pair-averaging
//! augmentation loop that grows a sentence cluster with novel members.

pub mod normal;
pub mod pca;

use std::collections::HashSet;

use rand::Rng;

use crate::corpus::{EmbeddedSentence, SentenceStructure, SynthCorpus};
use crate::error::{Error, Result};
use crate::vector::LatentVector;
use normal::{std_normal_cdf, std_normal_quantile};

pub use pca::{pca_project, PcaProjection};

/// Largest double strictly below 1; quantile inputs are clamped into
/// [`f64::MIN_POSITIVE`, this] so traversal never leaves the open interval.
const UNIT_UPPER: f64 = 1.0 - f64::EPSILON / 2.0;

/// Interior points of the straight line from `source` to `target`.
///
/// The path visits t = step, 2*step, ... strictly inside (0, 1); the point
/// count is round(1/step) - 1, so a step of 0.1 yields nine points and the
/// endpoints are never included. Equal endpoints reproduce themselves
/// exactly at every t.
pub fn interpolate_path(
    source: &LatentVector,
    target: &LatentVector,
    step: f64,
) -> Result<Vec<LatentVector>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "interpolation step must lie strictly inside (0, 1), got {step}"
        )));
    }
    check_same_dim(source, target, "interpolation endpoints")?;
    let count = (1.0 / step).round() as usize - 1;
    let mut points = Vec::with_capacity(count);
    for k in 1..=count {
        let t = k as f64 * step;
        let values = source
            .iter()
            .zip(target.iter())
            .map(|(a, b)| a + t * (b - a))
            .collect();
        points.push(LatentVector::new(values)?);
    }
    Ok(points)
}

/// Coordinate-wise midpoint of two latent points. Symmetric to the bit:
/// swapping the arguments cannot change the result.
pub fn latent_average(a: &LatentVector, b: &LatentVector) -> Result<LatentVector> {
    check_same_dim(a, b, "average operands")?;
    let values = a.iter().zip(b.iter()).map(|(x, y)| (x + y) / 2.0).collect();
    LatentVector::new(values)
}

fn check_same_dim(a: &LatentVector, b: &LatentVector, context: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: context.into(),
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Half-width of the probability window used by [`traverse_neighbour`].
/// Each coordinate moves at most this far in CDF space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraversalWindow {
    half_width: f64,
}

impl TraversalWindow {
    pub const DEFAULT_HALF_WIDTH: f64 = 0.005;

    /// Half-width must lie in (0, 0.5].
    pub fn new(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "traversal half-width must lie in (0, 0.5], got {half_width}"
            )));
        }
        Ok(TraversalWindow { half_width })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
}

impl Default for TraversalWindow {
    fn default() -> Self {
        TraversalWindow {
            half_width: Self::DEFAULT_HALF_WIDTH,
        }
    }
}

/// Resamples each coordinate uniformly within a small window around its
/// own quantile: u_i ~ U[cdf(v_i) - w, cdf(v_i) + w] clamped into the open
/// unit interval, then v'_i = quantile(u_i). The displacement of every
/// coordinate is therefore at most `w` in probability mass, which keeps the
/// neighbour semantically close when coordinates are near standard normal.
pub fn traverse_neighbour<R: Rng + ?Sized>(
    v: &LatentVector,
    window: &TraversalWindow,
    rng: &mut R,
) -> Result<LatentVector> {
    let w = window.half_width();
    let mut values = Vec::with_capacity(v.dim());
    for &x in v.iter() {
        let c = std_normal_cdf(x);
        let lo = (c - w).max(f64::MIN_POSITIVE).min(UNIT_UPPER);
        let hi = (c + w).min(UNIT_UPPER).max(lo);
        let u = lo + (hi - lo) * rng.random::<f64>();
        values.push(std_normal_quantile(u)?);
    }
    LatentVector::new(values)
}

/// Maps between sentence space and the vector space being traversed during
/// augmentation. The plain synthetic corpus traverses its own embedding
/// space; a trained flow lifts embeddings into its latent space first.
pub trait AugmentationCodec {
    /// Maps a stored embedding into the traversal space.
    fn lift(&self, v: &LatentVector) -> Result<LatentVector>;
    /// Maps a traversed point back to the nearest sentence.
    fn lower(&self, v: &LatentVector) -> Result<SentenceStructure>;
    /// Embeds a freshly produced sentence for storage.
    fn embed(&self, s: &SentenceStructure) -> Result<LatentVector>;
}

impl AugmentationCodec for SynthCorpus {
    fn lift(&self, v: &LatentVector) -> Result<LatentVector> {
        Ok(v.clone())
    }

    fn lower(&self, v: &LatentVector) -> Result<SentenceStructure> {
        self.decode(v.as_slice())
    }

    fn embed(&self, s: &SentenceStructure) -> Result<LatentVector> {
        self.encode(s)
    }
}

/// Settings for [`augment_cluster`].
#[derive(Debug, Clone, Copy)]
pub struct AugmentConfig {
    pub window: TraversalWindow,
    /// Number of novel sentences requested.
    pub budget: usize,
    /// Traversal draws per seed pair before moving to the next pair.
    pub attempts_per_pair: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            window: TraversalWindow::default(),
            budget: 100,
            attempts_per_pair: 1,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidParameter(
                "augmentation budget must be at least 1".into(),
            ));
        }
        if self.attempts_per_pair == 0 {
            return Err(Error::InvalidParameter(
                "attempts per pair must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Grows the cluster identified by `(target_role, target_content)` with up
/// to `budget` novel sentences.
///
/// Seed pairs are the unordered pairs of corpus sentences carrying the
/// target role-content. Each attempt averages a lifted pair, traverses to a
/// neighbour, and maps the neighbour back to a sentence; the sentence is
/// kept only if its structure is new (absent from the corpus and from
/// earlier keeps) and still carries the target role-content. Pairs are
/// cycled in a fixed order until the budget is met or ten times the budget
/// in attempts has been spent, so saturated inventories terminate with a
/// short result rather than spinning. Output ids are `aug` plus a counter;
/// identical seeds reproduce identical output.
pub fn augment_cluster<C: AugmentationCodec, R: Rng + ?Sized>(
    corpus: &[EmbeddedSentence],
    target_role: &str,
    target_content: &str,
    codec: &C,
    config: &AugmentConfig,
    rng: &mut R,
) -> Result<Vec<EmbeddedSentence>> {
    config.validate()?;
    let seeds: Vec<&EmbeddedSentence> = corpus
        .iter()
        .filter(|s| s.structure.content_of(target_role) == Some(target_content))
        .collect();
    if seeds.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "augmenting {target_role}={target_content} needs at least 2 seed \
             sentences, found {}",
            seeds.len()
        )));
    }
    let lifted: Vec<LatentVector> = seeds
        .iter()
        .map(|s| codec.lift(&s.vector))
        .collect::<Result<_>>()?;

    let mut known: HashSet<String> = corpus.iter().map(|s| s.structure.key()).collect();
    let mut produced = Vec::new();
    let mut attempts = 0usize;
    let max_attempts = config.budget.saturating_mul(10);

    'search: loop {
        for i in 0..lifted.len() {
            for j in (i + 1)..lifted.len() {
                for _ in 0..config.attempts_per_pair {
                    if produced.len() >= config.budget || attempts >= max_attempts {
                        break 'search;
                    }
                    attempts += 1;
                    let midpoint = latent_average(&lifted[i], &lifted[j])?;
                    let neighbour = traverse_neighbour(&midpoint, &config.window, rng)?;
                    let structure = codec.lower(&neighbour)?;
                    if structure.content_of(target_role) != Some(target_content) {
                        continue;
                    }
                    let key = structure.key();
                    if !known.insert(key) {
                        continue;
                    }
                    let vector = codec.embed(&structure)?;
                    let text = Some(structure.render());
                    produced.push(EmbeddedSentence {
                        id: format!("aug{:06}", produced.len()),
                        vector,
                        structure,
                        text,
                    });
                }
            }
        }
    }
    Ok(produced)
}
