//! `interpolate`: decodes the straight latent line between two corpus
//! sentences and writes one CSV row per point.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Deserialize;

use sentflow::artifact::atomic_write_str;
use sentflow::corpus::EmbeddedSentence;
use sentflow::geometry::interpolate_path;
use sentflow::{fmt_g17, Error, LatentVector, Result};

use crate::common::{load_model, load_space, require, with_overlay, Overlay, SpecPreset};

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolateArgs {
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
    /// Flow checkpoint to interpolate under.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Id of the source sentence.
    #[arg(long)]
    pub from: Option<String>,
    /// Id of the target sentence.
    #[arg(long)]
    pub to: Option<String>,
    /// Interpolation step width.
    #[arg(long)]
    pub step: Option<f64>,
    /// Destination CSV file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

impl Overlay for InterpolateArgs {
    fn take_config(&mut self) -> Option<PathBuf> {
        self.config.take()
    }

    fn or(self, fb: Self) -> Self {
        InterpolateArgs {
            config: None,
            corpus: self.corpus.or(fb.corpus),
            spec: self.spec.or(fb.spec),
            corpus_seed: self.corpus_seed.or(fb.corpus_seed),
            model: self.model.or(fb.model),
            from: self.from.or(fb.from),
            to: self.to.or(fb.to),
            step: self.step.or(fb.step),
            out: self.out.or(fb.out),
        }
    }
}

pub fn run(args: InterpolateArgs) -> Result<()> {
    let args = with_overlay(args)?;
    let preset = args.spec.unwrap_or(SpecPreset::Default);
    let corpus_seed = args.corpus_seed.unwrap_or(0);
    let corpus_path = require(args.corpus, "--corpus")?;
    let model_path = require(args.model, "--model")?;
    let from = require(args.from, "--from")?;
    let to = require(args.to, "--to")?;
    let step = args.step.unwrap_or(0.1);
    let out = require(args.out, "--out")?;

    let loaded = load_space(&corpus_path, preset, corpus_seed)?;
    let by_id: BTreeMap<&str, &EmbeddedSentence> = loaded
        .sentences
        .iter()
        .map(|s| (s.id.as_str(), s))
        .collect();
    let lookup = |id: &str| -> Result<&EmbeddedSentence> {
        by_id.get(id).copied().ok_or_else(|| Error::UnknownSymbol {
            kind: "sentence id",
            name: id.to_string(),
        })
    };
    let a = lookup(&from)?;
    let b = lookup(&to)?;
    let model = load_model(&model_path, loaded.corpus.spec().dim)?;

    let (za, _) = model.forward(a.vector.as_slice())?;
    let (zb, _) = model.forward(b.vector.as_slice())?;
    let za = LatentVector::new(za)?;
    let zb = LatentVector::new(zb)?;
    let interiors = interpolate_path(&za, &zb, step)?;

    let mut csv = String::from("t,key,text\n");
    let mut push_row = |t: f64, z: &LatentVector| -> Result<()> {
        let (x, _) = model.inverse(z.as_slice())?;
        let structure = loaded.corpus.decode(&x)?;
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_g17(t),
            structure.key(),
            structure.render()
        ));
        Ok(())
    };
    push_row(0.0, &za)?;
    for (i, z) in interiors.iter().enumerate() {
        push_row((i + 1) as f64 * step, z)?;
    }
    push_row(1.0, &zb)?;
    atomic_write_str(&out, &csv)?;
    println!(
        "{} interpolation points written to {}",
        interiors.len() + 2,
        out.display()
    );
    Ok(())
}
