//! Plumbing shared by the subcommands: config-file overlays, corpus
//! presets, checkpoint loading with dimension checks, and the deterministic
//! samplers used by more than one command.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use sentflow::corpus::{
    default_spec, load_embeddings, single_role_spec, small_spec, CorpusSpec, EmbeddedSentence,
    SentenceStructure, SynthCorpus,
};
use sentflow::flow::checkpoint::load_checkpoint;
use sentflow::flow::FlowModel;
use sentflow::geometry::interpolate_path;
use sentflow::{Error, LatentVector, Result};

/// Named corpus configurations selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpecPreset {
    /// Four subject clusters over five roles, 2000 sentences in 32 dims.
    Default,
    /// One subject slot per sentence: prototypes plus noise only.
    SingleRole,
    /// Two tiny clusters in 8 dims, for fast smoke runs.
    Small,
}

impl SpecPreset {
    pub fn spec(self, seed: u64) -> CorpusSpec {
        match self {
            SpecPreset::Default => default_spec(seed),
            SpecPreset::SingleRole => single_role_spec(seed),
            SpecPreset::Small => small_spec(seed),
        }
    }
}

/// A subcommand argument set that can fill its unset fields from a JSON
/// config file. Explicit flags always win over file values.
pub trait Overlay: Sized + DeserializeOwned {
    /// Takes the config-file path out of the arguments, if one was given.
    fn take_config(&mut self) -> Option<PathBuf>;
    /// Fills every unset field of `self` from `fallback`.
    fn or(self, fallback: Self) -> Self;
}

/// Applies the `--config` overlay when one was named.
pub fn with_overlay<T: Overlay>(mut args: T) -> Result<T> {
    match args.take_config() {
        Some(path) => {
            let text = name_io(std::fs::read_to_string(&path).map_err(Error::from), &path)?;
            let file: T = serde_json::from_str(&text).map_err(|e| Error::Parse {
                line: Some(e.line()),
                message: format!("{}: {e}", path.display()),
            })?;
            Ok(args.or(file))
        }
        None => Ok(args),
    }
}

/// Unwraps a value that must come from either a flag or the config file.
pub fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| {
        Error::InvalidParameter(format!("{flag} is required (flag or config file)"))
    })
}

/// Attaches the file name to bare I/O errors, which otherwise name nothing.
pub fn name_io<T>(result: Result<T>, path: &Path) -> Result<T> {
    result.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    })
}

/// Writes the effective post-merge settings into the directory whose
/// artifacts they produced.
pub fn echo_config<T: Serialize>(out_dir: &Path, command: &str, settings: &T) -> Result<()> {
    let body = serde_json::json!({ "command": command, "settings": settings });
    let text = serde_json::to_string_pretty(&body)
        .map_err(|e| Error::Invariant(format!("settings serialisation failed: {e}")))?;
    sentflow::artifact::atomic_write_str(&out_dir.join("config.json"), &format!("{text}\n"))
}

/// Loads a checkpoint and checks its width against the corpus dimension.
pub fn load_model(path: &Path, dim: usize) -> Result<FlowModel> {
    let model = name_io(load_checkpoint(path), path)?;
    if model.dim() != dim {
        return Err(Error::DimensionMismatch {
            context: format!("checkpoint {}", path.display()),
            expected: dim,
            got: model.dim(),
        });
    }
    Ok(model)
}

/// A rebuilt corpus space plus the sentences loaded from disk.
pub struct Loaded {
    pub corpus: SynthCorpus,
    pub sentences: Vec<EmbeddedSentence>,
}

/// Rebuilds the deterministic corpus space for `preset` and `corpus_seed`
/// and loads the sentence file generated from it. Preset and seed must
/// match the ones used at generation time; the decoder is meaningless
/// against any other space.
pub fn load_space(jsonl: &Path, preset: SpecPreset, corpus_seed: u64) -> Result<Loaded> {
    let corpus = SynthCorpus::build(preset.spec(corpus_seed))?;
    let sentences = name_io(load_embeddings(jsonl), jsonl)?;
    if sentences.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} holds no sentences",
            jsonl.display()
        )));
    }
    let dim = corpus.spec().dim;
    if sentences[0].vector.dim() != dim {
        return Err(Error::DimensionMismatch {
            context: format!("{} against the corpus preset", jsonl.display()),
            expected: dim,
            got: sentences[0].vector.dim(),
        });
    }
    Ok(Loaded { corpus, sentences })
}

/// Maps every sentence vector through the flow.
pub fn latents(model: &FlowModel, sentences: &[EmbeddedSentence]) -> Result<Vec<LatentVector>> {
    sentences
        .iter()
        .map(|s| {
            let (z, _) = model.forward(s.vector.as_slice())?;
            LatentVector::new(z)
        })
        .collect()
}

/// Extracts each sentence's content for `role`, failing on the first
/// sentence that does not carry it.
pub fn role_labels(sentences: &[EmbeddedSentence], role: &str) -> Result<Vec<String>> {
    sentences
        .iter()
        .map(|s| {
            s.structure
                .content_of(role)
                .map(str::to_string)
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "sentence {} does not carry role {role}",
                        s.id
                    ))
                })
        })
        .collect()
}

/// Samples `count` distinct unordered sentence pairs that share their
/// content for `role`. Only contents carried by two or more sentences can
/// contribute.
pub fn shared_role_pairs<'a>(
    sentences: &'a [EmbeddedSentence],
    role: &str,
    count: usize,
    seed: u64,
) -> Result<Vec<(&'a EmbeddedSentence, &'a EmbeddedSentence)>> {
    let mut by_content: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in sentences.iter().enumerate() {
        if let Some(content) = s.structure.content_of(role) {
            by_content.entry(content).or_default().push(i);
        }
    }
    let groups: Vec<Vec<usize>> = by_content
        .into_values()
        .filter(|g| g.len() >= 2)
        .collect();
    let available: usize = groups.iter().map(|g| g.len() * (g.len() - 1) / 2).sum();
    if available < count {
        return Err(Error::InvalidInput(format!(
            "role {role} offers {available} shared-content pairs, {count} requested"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let group = &groups[rng.random_range(0..groups.len())];
        let a = group[rng.random_range(0..group.len())];
        let b = group[rng.random_range(0..group.len())];
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            pairs.push((&sentences[key.0], &sentences[key.1]));
        }
    }
    Ok(pairs)
}

/// Samples `count` distinct unordered index pairs over the whole dataset.
pub fn distinct_pairs<'a>(
    sentences: &'a [EmbeddedSentence],
    count: usize,
    seed: u64,
) -> Result<Vec<(&'a EmbeddedSentence, &'a EmbeddedSentence)>> {
    let n = sentences.len();
    if n < 2 || count > n * (n - 1) / 2 {
        return Err(Error::InvalidInput(format!(
            "{n} sentences cannot supply {count} distinct pairs"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            pairs.push((&sentences[key.0], &sentences[key.1]));
        }
    }
    Ok(pairs)
}

/// Decodes the straight latent line between two embeddings: both endpoints
/// round-trip through the model, interior points sit at multiples of
/// `step`.
pub fn decoded_path(
    model: &FlowModel,
    corpus: &SynthCorpus,
    a: &LatentVector,
    b: &LatentVector,
    step: f64,
) -> Result<Vec<SentenceStructure>> {
    let (za, _) = model.forward(a.as_slice())?;
    let (zb, _) = model.forward(b.as_slice())?;
    let za = LatentVector::new(za)?;
    let zb = LatentVector::new(zb)?;
    let mut points = vec![za.clone()];
    points.extend(interpolate_path(&za, &zb, step)?);
    points.push(zb);
    points
        .iter()
        .map(|z| {
            let (x, _) = model.inverse(z.as_slice())?;
            corpus.decode(&x)
        })
        .collect()
}
