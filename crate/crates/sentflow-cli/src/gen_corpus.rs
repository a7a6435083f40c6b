//! `gen-corpus`: writes a synthetic role-labelled corpus as JSONL.
//! Identical preset and seed give byte-identical files.

use std::path::PathBuf;

use serde::Deserialize;

use sentflow::corpus::{save_embeddings, SynthCorpus};
use sentflow::Result;

use crate::common::{require, with_overlay, Overlay, SpecPreset};

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenCorpusArgs {
    /// JSON file whose keys mirror these flags; explicit flags win.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Corpus preset to instantiate.
    #[arg(long, value_enum)]
    pub spec: Option<SpecPreset>,
    /// Generation seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Destination JSONL file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

impl Overlay for GenCorpusArgs {
    fn take_config(&mut self) -> Option<PathBuf> {
        self.config.take()
    }

    fn or(self, fb: Self) -> Self {
        GenCorpusArgs {
            config: None,
            spec: self.spec.or(fb.spec),
            seed: self.seed.or(fb.seed),
            out: self.out.or(fb.out),
        }
    }
}

pub fn run(args: GenCorpusArgs) -> Result<()> {
    let args = with_overlay(args)?;
    let preset = args.spec.unwrap_or(SpecPreset::Default);
    let seed = args.seed.unwrap_or(0);
    let out = require(args.out, "--out")?;

    let corpus = SynthCorpus::build(preset.spec(seed))?;
    let sentences = corpus.generate()?;
    save_embeddings(&out, &sentences)?;
    println!("wrote {} sentences to {}", sentences.len(), out.display());
    Ok(())
}
