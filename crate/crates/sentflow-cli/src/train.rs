//! `train`: fits a flow on corpus embeddings and writes checkpoint,
//! loss curve and the effective settings into one directory.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use sentflow::corpus::{cluster_assignments, compute_cluster_specs, load_embeddings};
use sentflow::flow::checkpoint::save_checkpoint;
use sentflow::flow::{FlowModel, DEFAULT_BLOCKS, DEFAULT_CLAMP, DEFAULT_HIDDEN};
use sentflow::train::{
    fit, write_loss_csv, CentroidMode, TrainingConfig, TrainingMode, DEFAULT_SIGMA2,
};
use sentflow::{Error, LatentVector, Result};

use crate::common::{echo_config, name_io, require, with_overlay, Overlay};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Unsupervised,
    ClusterSupervised,
}

impl From<ModeArg> for TrainingMode {
    fn from(m: ModeArg) -> TrainingMode {
        match m {
            ModeArg::Unsupervised => TrainingMode::Unsupervised,
            ModeArg::ClusterSupervised => TrainingMode::ClusterSupervised,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CentroidArg {
    LatentRefreshed,
    InputMappedOnce,
}

impl From<CentroidArg> for CentroidMode {
    fn from(c: CentroidArg) -> CentroidMode {
        match c {
            CentroidArg::LatentRefreshed => CentroidMode::LatentRefreshed,
            CentroidArg::InputMappedOnce => CentroidMode::InputMappedOnce,
        }
    }
}

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    /// JSON file whose keys mirror these flags; explicit flags win.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Corpus JSONL produced by gen-corpus.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Directory for checkpoint.json, loss.csv and config.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Coupling blocks in the flow.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Hidden width of each coupling subnet.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Log-scale clamp inside the couplings.
    #[arg(long)]
    pub clamp: Option<f64>,
    /// Seed for weight initialisation.
    #[arg(long)]
    pub model_seed: Option<u64>,
    /// Training objective.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Role whose contents define the supervision clusters.
    #[arg(long)]
    pub role: Option<String>,
    /// Residual within-cluster variance of the supervised target.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Where the supervised target centres come from.
    #[arg(long, value_enum)]
    pub centroids: Option<CentroidArg>,
    /// Optimizer step size.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Decoupled weight-decay coefficient.
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// First-moment decay of the optimizer.
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Second-moment decay of the optimizer.
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Denominator guard inside the optimizer update.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Sentences per gradient step.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Full passes over the corpus.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Seed for batch shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Overlay for TrainArgs {
    fn take_config(&mut self) -> Option<PathBuf> {
        self.config.take()
    }

    fn or(self, fb: Self) -> Self {
        TrainArgs {
            config: None,
            corpus: self.corpus.or(fb.corpus),
            out_dir: self.out_dir.or(fb.out_dir),
            blocks: self.blocks.or(fb.blocks),
            hidden: self.hidden.or(fb.hidden),
            clamp: self.clamp.or(fb.clamp),
            model_seed: self.model_seed.or(fb.model_seed),
            mode: self.mode.or(fb.mode),
            role: self.role.or(fb.role),
            sigma2: self.sigma2.or(fb.sigma2),
            centroids: self.centroids.or(fb.centroids),
            learning_rate: self.learning_rate.or(fb.learning_rate),
            weight_decay: self.weight_decay.or(fb.weight_decay),
            beta1: self.beta1.or(fb.beta1),
            beta2: self.beta2.or(fb.beta2),
            eps: self.eps.or(fb.eps),
            batch_size: self.batch_size.or(fb.batch_size),
            epochs: self.epochs.or(fb.epochs),
            seed: self.seed.or(fb.seed),
        }
    }
}

/// Effective post-merge settings, echoed to config.json.
#[derive(Debug, Serialize)]
struct TrainSettings {
    corpus: PathBuf,
    out_dir: PathBuf,
    blocks: usize,
    hidden: usize,
    clamp: f64,
    model_seed: u64,
    mode: ModeArg,
    role: String,
    sigma2: f64,
    centroids: CentroidArg,
    learning_rate: f64,
    weight_decay: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    batch_size: usize,
    epochs: usize,
    seed: u64,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let args = with_overlay(args)?;
    let defaults = TrainingConfig::default();
    let s = TrainSettings {
        corpus: require(args.corpus, "--corpus")?,
        out_dir: require(args.out_dir, "--out-dir")?,
        blocks: args.blocks.unwrap_or(DEFAULT_BLOCKS),
        hidden: args.hidden.unwrap_or(DEFAULT_HIDDEN),
        clamp: args.clamp.unwrap_or(DEFAULT_CLAMP),
        model_seed: args.model_seed.unwrap_or(0),
        mode: args.mode.unwrap_or(ModeArg::Unsupervised),
        role: args.role.unwrap_or_else(|| "ARG0".into()),
        sigma2: args.sigma2.unwrap_or(DEFAULT_SIGMA2),
        centroids: args.centroids.unwrap_or(CentroidArg::LatentRefreshed),
        learning_rate: args.learning_rate.unwrap_or(defaults.learning_rate),
        weight_decay: args.weight_decay.unwrap_or(defaults.weight_decay),
        beta1: args.beta1.unwrap_or(defaults.beta1),
        beta2: args.beta2.unwrap_or(defaults.beta2),
        eps: args.eps.unwrap_or(defaults.eps),
        batch_size: args.batch_size.unwrap_or(defaults.batch_size),
        epochs: args.epochs.unwrap_or(defaults.epochs),
        seed: args.seed.unwrap_or(defaults.seed),
    };

    let sentences = name_io(load_embeddings(&s.corpus), &s.corpus)?;
    if sentences.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} holds no sentences",
            s.corpus.display()
        )));
    }
    let dim = sentences[0].vector.dim();
    let data: Vec<LatentVector> = sentences.iter().map(|x| x.vector.clone()).collect();

    let ids = match s.mode {
        ModeArg::Unsupervised => None,
        ModeArg::ClusterSupervised => {
            let specs = compute_cluster_specs(&sentences, &s.role, s.sigma2)?;
            let assigned = cluster_assignments(&sentences, &specs);
            let mut ids = Vec::with_capacity(assigned.len());
            for (sent, a) in sentences.iter().zip(&assigned) {
                match a {
                    Some(c) => ids.push(*c),
                    None => {
                        return Err(Error::InvalidInput(format!(
                            "sentence {} does not carry role {}",
                            sent.id, s.role
                        )))
                    }
                }
            }
            Some(ids)
        }
    };

    let mut model = FlowModel::new(dim, s.blocks, s.hidden, s.clamp, s.model_seed)?;
    let config = TrainingConfig {
        learning_rate: s.learning_rate,
        weight_decay: s.weight_decay,
        beta1: s.beta1,
        beta2: s.beta2,
        eps: s.eps,
        batch_size: s.batch_size,
        epochs: s.epochs,
        seed: s.seed,
        mode: s.mode.into(),
        sigma2: s.sigma2,
        centroid_mode: s.centroids.into(),
    };

    std::fs::create_dir_all(&s.out_dir)?;
    echo_config(&s.out_dir, "train", &s)?;
    let run = fit(&mut model, &data, ids.as_deref(), &config)?;
    save_checkpoint(&model, &s.out_dir.join("checkpoint.json"))?;
    write_loss_csv(&s.out_dir.join("loss.csv"), &run.epoch_losses)?;
    println!(
        "trained {} epochs; mean loss {:.6} -> {:.6}",
        run.epoch_losses.len(),
        run.epoch_losses.first().copied().unwrap_or(f64::NAN),
        run.epoch_losses.last().copied().unwrap_or(f64::NAN),
    );
    Ok(())
}
