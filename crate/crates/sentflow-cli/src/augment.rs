//! `augment`: grows one role-content cluster with novel sentences found by
//! midpoint traversal, either in embedding space or in a trained flow's
//! latent space.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Deserialize;

use sentflow::corpus::{save_embeddings, SentenceStructure, SynthCorpus};
use sentflow::flow::FlowModel;
use sentflow::geometry::{augment_cluster, AugmentConfig, AugmentationCodec, TraversalWindow};
use sentflow::{LatentVector, Result};

use crate::common::{load_model, load_space, require, with_overlay, Overlay, SpecPreset};

/// Traverses in the latent space of a trained flow instead of the plain
/// embedding space; produced sentences are still re-embedded cleanly.
struct FlowCodec<'a> {
    corpus: &'a SynthCorpus,
    model: &'a FlowModel,
}

impl AugmentationCodec for FlowCodec<'_> {
    fn lift(&self, v: &LatentVector) -> Result<LatentVector> {
        let (z, _) = self.model.forward(v.as_slice())?;
        LatentVector::new(z)
    }

    fn lower(&self, v: &LatentVector) -> Result<SentenceStructure> {
        let (x, _) = self.model.inverse(v.as_slice())?;
        self.corpus.decode(&x)
    }

    fn embed(&self, s: &SentenceStructure) -> Result<LatentVector> {
        self.corpus.encode(s)
    }
}

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentArgs {
    /// JSON file whose keys mirror these flags; explicit flags win.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Corpus JSONL produced by gen-corpus.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Preset the corpus was generated from.
    #[arg(long, value_enum)]
    pub spec: Option<SpecPreset>,
    /// Seed the corpus was generated with.
    #[arg(long)]
    pub corpus_seed: Option<u64>,
    /// Role of the cluster to grow; defaults to the preset's cluster role.
    #[arg(long)]
    pub role: Option<String>,
    /// Content of the cluster to grow.
    #[arg(long)]
    pub content: Option<String>,
    /// Number of novel sentences requested.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Half-width of the traversal window in rank space.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Traversal draws per seed pair before moving on.
    #[arg(long)]
    pub attempts_per_pair: Option<usize>,
    /// Seed for the traversal draws.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optional flow checkpoint; traversal then runs in its latent space.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Destination JSONL file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

impl Overlay for AugmentArgs {
    fn take_config(&mut self) -> Option<PathBuf> {
        self.config.take()
    }

    fn or(self, fb: Self) -> Self {
        AugmentArgs {
            config: None,
            corpus: self.corpus.or(fb.corpus),
            spec: self.spec.or(fb.spec),
            corpus_seed: self.corpus_seed.or(fb.corpus_seed),
            role: self.role.or(fb.role),
            content: self.content.or(fb.content),
            budget: self.budget.or(fb.budget),
            half_width: self.half_width.or(fb.half_width),
            attempts_per_pair: self.attempts_per_pair.or(fb.attempts_per_pair),
            seed: self.seed.or(fb.seed),
            model: self.model.or(fb.model),
            out: self.out.or(fb.out),
        }
    }
}

pub fn run(args: AugmentArgs) -> Result<()> {
    let args = with_overlay(args)?;
    let preset = args.spec.unwrap_or(SpecPreset::Default);
    let corpus_seed = args.corpus_seed.unwrap_or(0);
    let corpus_path = require(args.corpus, "--corpus")?;
    let content = require(args.content, "--content")?;
    let out = require(args.out, "--out")?;

    let loaded = load_space(&corpus_path, preset, corpus_seed)?;
    let corpus = &loaded.corpus;
    let role = args
        .role
        .unwrap_or_else(|| corpus.spec().cluster_role.clone());
    let config = AugmentConfig {
        window: TraversalWindow::new(
            args.half_width.unwrap_or(TraversalWindow::DEFAULT_HALF_WIDTH),
        )?,
        budget: args.budget.unwrap_or(100),
        attempts_per_pair: args.attempts_per_pair.unwrap_or(1),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed.unwrap_or(0));

    let produced = match &args.model {
        Some(path) => {
            let model = load_model(path, corpus.spec().dim)?;
            let codec = FlowCodec {
                corpus,
                model: &model,
            };
            augment_cluster(&loaded.sentences, &role, &content, &codec, &config, &mut rng)?
        }
        None => augment_cluster(&loaded.sentences, &role, &content, corpus, &config, &mut rng)?,
    };

    save_embeddings(&out, &produced)?;
    println!(
        "augmented {role}={content} with {} novel sentences",
        produced.len()
    );
    Ok(())
}
