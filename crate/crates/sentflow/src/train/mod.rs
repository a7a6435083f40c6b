//! Maximum-likelihood training: seeded shuffling, actnorm data-init on the
//! first batch, optional per-cluster Gaussian targets with centroids
//! refreshed as the map moves.

mod adamw;
mod backprop;
mod loss;

pub use adamw::{adamw_step, AdamWConfig, AdamWState};
pub use backprop::{backprop_gradients, BlockGrads, GradientSet, SampleTarget};
pub use loss::{loss_cluster_supervised, loss_unsupervised, ClusterSpec, DEFAULT_SIGMA2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::artifact::atomic_write_str;
use crate::error::{Error, Result};
use crate::flow::FlowModel;
use crate::{fmt_g17, LatentVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingMode {
    Unsupervised,
    ClusterSupervised,
}

/// Where the supervised target centres come from. `LatentRefreshed`
/// recomputes each cluster's mean latent at every epoch start;
/// `InputMappedOnce` maps the fixed input-space centroids through the model
/// once, right after initialisation, and freezes them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentroidMode {
    LatentRefreshed,
    InputMappedOnce,
}

#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub mode: TrainingMode,
    pub sigma2: f64,
    pub centroid_mode: CentroidMode,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 5e-4,
            weight_decay: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 64,
            epochs: 50,
            seed: 0,
            mode: TrainingMode::Unsupervised,
            sigma2: DEFAULT_SIGMA2,
            centroid_mode: CentroidMode::LatentRefreshed,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer().validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epoch count must be at least 1".into()));
        }
        if self.mode == TrainingMode::ClusterSupervised {
            loss::check_sigma2(self.sigma2)?;
        }
        Ok(())
    }

    fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }
}

/// What a call to [`fit`] produced besides the mutated model.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    /// Mean loss per epoch, sample-weighted across batches.
    pub epoch_losses: Vec<f64>,
    /// Final per-cluster target centres in latent space; empty when
    /// training was unsupervised.
    pub centroids: Vec<LatentVector>,
}

/// In-place Fisher-Yates; the single shuffle primitive used for training so
/// batch composition is a pure function of the seed.
pub(crate) fn shuffle_indices<R: Rng>(order: &mut [usize], rng: &mut R) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

/// Trains `model` on `data`. For cluster-supervised mode, `cluster_of` must
/// give each sample's cluster index; indices must form a gap-free range
/// `0..n` with every cluster nonempty. The dataset itself is never mutated.
pub fn fit(
    model: &mut FlowModel,
    data: &[LatentVector],
    cluster_of: Option<&[usize]>,
    config: &TrainingConfig,
) -> Result<TrainingRun> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
    }
    for (i, v) in data.iter().enumerate() {
        if v.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                context: format!("training sample {i}"),
                expected: model.dim(),
                got: v.dim(),
            });
        }
    }
    let supervised = config.mode == TrainingMode::ClusterSupervised;
    let groups: Option<Vec<Vec<usize>>> = if supervised {
        let ids = cluster_of.ok_or_else(|| {
            Error::InvalidInput(
                "cluster-supervised training needs a cluster index per sample".into(),
            )
        })?;
        if ids.len() != data.len() {
            return Err(Error::InvalidInput(format!(
                "{} cluster indices for {} samples",
                ids.len(),
                data.len()
            )));
        }
        let n_clusters = ids.iter().max().copied().unwrap_or(0) + 1;
        let mut groups = vec![Vec::new(); n_clusters];
        for (i, &c) in ids.iter().enumerate() {
            groups[c].push(i);
        }
        if let Some(empty) = groups.iter().position(Vec::is_empty) {
            return Err(Error::InvalidInput(format!(
                "cluster {empty} has no samples"
            )));
        }
        Some(groups)
    } else {
        None
    };
    let ids = cluster_of.unwrap_or(&[]);

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let opt_config = config.optimizer();
    let mut opt_state = AdamWState::new();
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        shuffle_indices(&mut order, &mut rng);
        if epoch == 0 && !model.is_initialized() {
            let span = config.batch_size.max(2).min(data.len());
            let first: Vec<LatentVector> =
                order[..span].iter().map(|&i| data[i].clone()).collect();
            model.initialize_actnorms(&first)?;
        }
        if let Some(groups) = &groups {
            let refresh = config.centroid_mode == CentroidMode::LatentRefreshed;
            if refresh || epoch == 0 {
                centroids = match config.centroid_mode {
                    CentroidMode::LatentRefreshed => latent_centroids(model, data, groups)?,
                    CentroidMode::InputMappedOnce => input_mapped_centroids(model, data, groups)?,
                };
            }
        }
        let mut loss_sum = 0.0;
        for (batch_no, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<(&[f64], SampleTarget)> = chunk
                .iter()
                .map(|&i| {
                    let target = if supervised {
                        SampleTarget::Cluster {
                            mu: &centroids[ids[i]],
                            sigma2: config.sigma2,
                        }
                    } else {
                        SampleTarget::Standard
                    };
                    (data[i].as_slice(), target)
                })
                .collect();
            let located = |e: Error| match e {
                Error::Numeric(msg) => {
                    Error::Numeric(format!("{msg} (epoch {epoch}, batch {batch_no})"))
                }
                other => other,
            };
            let (grads, loss) = backprop_gradients(model, &batch).map_err(located)?;
            loss_sum += loss * chunk.len() as f64;
            adamw_step(
                model.named_param_tensors_mut(),
                &grads.named_tensors(),
                &mut opt_state,
                &opt_config,
            )
            .map_err(located)?;
        }
        epoch_losses.push(loss_sum / data.len() as f64);
    }

    check_round_trip(model, data)?;
    let centroids = centroids
        .into_iter()
        .map(LatentVector::new)
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainingRun {
        epoch_losses,
        centroids,
    })
}

/// Mean latent per cluster under the current model.
fn latent_centroids(
    model: &FlowModel,
    data: &[LatentVector],
    groups: &[Vec<usize>],
) -> Result<Vec<Vec<f64>>> {
    groups
        .iter()
        .map(|members| {
            let mut acc = vec![0.0; model.dim()];
            for &i in members {
                let (z, _) = model.forward(&data[i])?;
                for (a, b) in acc.iter_mut().zip(&z) {
                    *a += b;
                }
            }
            let inv = 1.0 / members.len() as f64;
            for a in &mut acc {
                *a *= inv;
            }
            Ok(acc)
        })
        .collect()
}

/// Input-space centroid of each cluster pushed through the model once.
fn input_mapped_centroids(
    model: &FlowModel,
    data: &[LatentVector],
    groups: &[Vec<usize>],
) -> Result<Vec<Vec<f64>>> {
    groups
        .iter()
        .map(|members| {
            let mut acc = vec![0.0; model.dim()];
            for &i in members {
                for (a, b) in acc.iter_mut().zip(data[i].as_slice()) {
                    *a += b;
                }
            }
            let inv = 1.0 / members.len() as f64;
            for a in &mut acc {
                *a *= inv;
            }
            let (z, _) = model.forward(&acc)?;
            Ok(z)
        })
        .collect()
}

/// Post-training guard: the map must still invert cleanly on real samples.
fn check_round_trip(model: &FlowModel, data: &[LatentVector]) -> Result<()> {
    for v in data.iter().take(8) {
        let (z, ld_f) = model.forward(v)?;
        let (back, ld_i) = model.inverse(&z)?;
        if (ld_f + ld_i).abs() > 1e-9 * (1.0 + ld_f.abs()) {
            return Err(Error::Invariant(format!(
                "log-determinants no longer negate: {ld_f} vs {ld_i}"
            )));
        }
        for (a, b) in v.iter().zip(&back) {
            let tol = 1e-8 * (1.0 + a.abs());
            if (a - b).abs() > tol {
                return Err(Error::Invariant(format!(
                    "round trip drifted by {} after training",
                    (a - b).abs()
                )));
            }
        }
    }
    Ok(())
}

/// Writes a loss curve as `epoch,mean_loss` CSV with full-precision floats.
pub fn write_loss_csv(path: &std::path::Path, losses: &[f64]) -> Result<()> {
    let mut out = String::from("epoch,mean_loss\n");
    for (i, loss) in losses.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, fmt_g17(*loss)));
    }
    atomic_write_str(path, &out)
}
