//! `eval`: scores two trained flows against the raw-embedding baseline and
//! writes the full table set — classifier metrics per regime, per-cluster
//! round-trip retention, label retention along interpolations, path
//! smoothness, and paired bootstrap p-values.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use sentflow::artifact::atomic_write_str;
use sentflow::corpus::SentenceStructure;
use sentflow::eval::{
    bootstrap_significance, interpolation_smoothness, invertibility_ratio, localisation_ratio,
    macro_report, prototype_assignment_distance, rows_to_csv, rows_to_json, split_train_test,
    Classifier, ClassifierKind, ClassifierRow, Regime, BOOTSTRAP_RESAMPLES,
    DEFAULT_INVERTIBILITY_SAMPLES, DEFAULT_TRAIN_RATIO,
};
use sentflow::{fmt_g17, LatentVector, Result};

use crate::common::{
    decoded_path, distinct_pairs, echo_config, latents, load_model, load_space, require,
    role_labels, shared_role_pairs, with_overlay, Overlay, SpecPreset,
};

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
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
    /// Checkpoint of the flow trained without labels.
    #[arg(long, value_name = "FILE")]
    pub unsupervised: Option<PathBuf>,
    /// Checkpoint of the cluster-supervised flow.
    #[arg(long, value_name = "FILE")]
    pub supervised: Option<PathBuf>,
    /// Directory for the report tables and config.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Role whose contents are the classification labels.
    #[arg(long)]
    pub role: Option<String>,
    /// Fraction of each class used for classifier training.
    #[arg(long)]
    pub train_ratio: Option<f64>,
    /// Seed for the stratified split.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Round-trip samples drawn per cluster.
    #[arg(long)]
    pub per_cluster: Option<usize>,
    /// Seed for round-trip sampling.
    #[arg(long)]
    pub invertibility_seed: Option<u64>,
    /// Role the interpolation pairs share; defaults to --role.
    #[arg(long)]
    pub localisation_role: Option<String>,
    /// Number of shared-role interpolation pairs.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Seed for pair sampling.
    #[arg(long)]
    pub pair_seed: Option<u64>,
    /// Interpolation step width.
    #[arg(long)]
    pub step: Option<f64>,
    /// Number of smoothness paths.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Seed for path endpoint sampling.
    #[arg(long)]
    pub path_seed: Option<u64>,
    /// Bootstrap resamples per comparison.
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Seed for bootstrap resampling.
    #[arg(long)]
    pub bootstrap_seed: Option<u64>,
}

impl Overlay for EvalArgs {
    fn take_config(&mut self) -> Option<PathBuf> {
        self.config.take()
    }

    fn or(self, fb: Self) -> Self {
        EvalArgs {
            config: None,
            corpus: self.corpus.or(fb.corpus),
            spec: self.spec.or(fb.spec),
            corpus_seed: self.corpus_seed.or(fb.corpus_seed),
            unsupervised: self.unsupervised.or(fb.unsupervised),
            supervised: self.supervised.or(fb.supervised),
            out_dir: self.out_dir.or(fb.out_dir),
            role: self.role.or(fb.role),
            train_ratio: self.train_ratio.or(fb.train_ratio),
            split_seed: self.split_seed.or(fb.split_seed),
            per_cluster: self.per_cluster.or(fb.per_cluster),
            invertibility_seed: self.invertibility_seed.or(fb.invertibility_seed),
            localisation_role: self.localisation_role.or(fb.localisation_role),
            pairs: self.pairs.or(fb.pairs),
            pair_seed: self.pair_seed.or(fb.pair_seed),
            step: self.step.or(fb.step),
            paths: self.paths.or(fb.paths),
            path_seed: self.path_seed.or(fb.path_seed),
            resamples: self.resamples.or(fb.resamples),
            bootstrap_seed: self.bootstrap_seed.or(fb.bootstrap_seed),
        }
    }
}

/// Effective post-merge settings, echoed to config.json.
#[derive(Debug, Serialize)]
struct EvalSettings {
    corpus: PathBuf,
    spec: SpecPreset,
    corpus_seed: u64,
    unsupervised: PathBuf,
    supervised: PathBuf,
    out_dir: PathBuf,
    role: String,
    train_ratio: f64,
    split_seed: u64,
    per_cluster: usize,
    invertibility_seed: u64,
    localisation_role: String,
    pairs: usize,
    pair_seed: u64,
    step: f64,
    paths: usize,
    path_seed: u64,
    resamples: usize,
    bootstrap_seed: u64,
}

pub fn run(args: EvalArgs) -> Result<()> {
    let args = with_overlay(args)?;
    let preset = args.spec.unwrap_or(SpecPreset::Default);
    let corpus_seed = args.corpus_seed.unwrap_or(0);
    let corpus_path = require(args.corpus, "--corpus")?;
    let loaded = load_space(&corpus_path, preset, corpus_seed)?;
    let corpus = &loaded.corpus;
    let sentences = &loaded.sentences;

    let role = args
        .role
        .unwrap_or_else(|| corpus.spec().cluster_role.clone());
    let s = EvalSettings {
        corpus: corpus_path,
        spec: preset,
        corpus_seed,
        unsupervised: require(args.unsupervised, "--unsupervised")?,
        supervised: require(args.supervised, "--supervised")?,
        out_dir: require(args.out_dir, "--out-dir")?,
        localisation_role: args.localisation_role.unwrap_or_else(|| role.clone()),
        role,
        train_ratio: args.train_ratio.unwrap_or(DEFAULT_TRAIN_RATIO),
        split_seed: args.split_seed.unwrap_or(0),
        per_cluster: args.per_cluster.unwrap_or(DEFAULT_INVERTIBILITY_SAMPLES),
        invertibility_seed: args.invertibility_seed.unwrap_or(0),
        pairs: args.pairs.unwrap_or(200),
        pair_seed: args.pair_seed.unwrap_or(0),
        step: args.step.unwrap_or(0.1),
        paths: args.paths.unwrap_or(200),
        path_seed: args.path_seed.unwrap_or(0),
        resamples: args.resamples.unwrap_or(BOOTSTRAP_RESAMPLES),
        bootstrap_seed: args.bootstrap_seed.unwrap_or(0),
    };

    let dim = corpus.spec().dim;
    let unsup = load_model(&s.unsupervised, dim)?;
    let sup = load_model(&s.supervised, dim)?;

    std::fs::create_dir_all(&s.out_dir)?;
    echo_config(&s.out_dir, "eval", &s)?;

    // Classifier table over the three regimes.
    let labels = role_labels(sentences, &s.role)?;
    let (train_idx, test_idx) = split_train_test(&labels, s.train_ratio, s.split_seed)?;
    let raw: Vec<LatentVector> = sentences.iter().map(|x| x.vector.clone()).collect();
    let unsup_lat = latents(&unsup, sentences)?;
    let sup_lat = latents(&sup, sentences)?;
    let test_y: Vec<String> = test_idx.iter().map(|&i| labels[i].clone()).collect();

    let mut rows = Vec::new();
    let mut preds: BTreeMap<(&'static str, &'static str), Vec<String>> = BTreeMap::new();
    for (regime, space) in [
        (Regime::OptimusLikeBaseline, &raw),
        (Regime::Unsupervised, &unsup_lat),
        (Regime::Supervised, &sup_lat),
    ] {
        let train_x: Vec<LatentVector> = train_idx.iter().map(|&i| space[i].clone()).collect();
        let train_y: Vec<String> = train_idx.iter().map(|&i| labels[i].clone()).collect();
        for kind in ClassifierKind::ALL {
            let clf = Classifier::fit(kind, &train_x, &train_y)?;
            let p: Vec<String> = test_idx
                .iter()
                .map(|&i| clf.predict(&space[i]).map(str::to_string))
                .collect::<Result<_>>()?;
            rows.push(ClassifierRow::new(kind, regime, macro_report(&p, &test_y)?));
            preds.insert((kind.label(), regime.label()), p);
        }
    }
    atomic_write_str(&s.out_dir.join("report.csv"), &rows_to_csv(&rows))?;
    atomic_write_str(&s.out_dir.join("report.json"), &rows_to_json(&rows)?)?;

    // Per-cluster label retention under an exact round trip.
    let mut inv = String::from("regime,cluster,ratio\n");
    for (regime, model) in [(Regime::Unsupervised, &unsup), (Regime::Supervised, &sup)] {
        let ratios = invertibility_ratio(
            model,
            sentences,
            &s.role,
            s.per_cluster,
            s.invertibility_seed,
            |v| corpus.decode(v),
        )?;
        for (cluster, ratio) in &ratios {
            inv.push_str(&format!(
                "{},{},{}\n",
                regime.label(),
                cluster,
                fmt_g17(*ratio)
            ));
        }
    }
    atomic_write_str(&s.out_dir.join("invertibility.csv"), &inv)?;

    // Label retention along latent lines between shared-role sentences.
    let pair_list = shared_role_pairs(sentences, &s.localisation_role, s.pairs, s.pair_seed)?;
    let loc_u = localisation_ratio(&unsup, &pair_list, &s.localisation_role, s.step, |v| {
        corpus.decode(v)
    })?;
    let loc_s = localisation_ratio(&sup, &pair_list, &s.localisation_role, s.step, |v| {
        corpus.decode(v)
    })?;
    let mut loc = String::from("t,unsupervised,supervised\n");
    for (i, (u, v)) in loc_u.iter().zip(&loc_s).enumerate() {
        let t = (i + 1) as f64 * s.step;
        loc.push_str(&format!("{},{},{}\n", fmt_g17(t), fmt_g17(*u), fmt_g17(*v)));
    }
    atomic_write_str(&s.out_dir.join("localisation.csv"), &loc)?;

    // Path smoothness against the exact prototype assignment distance.
    let endpoints = distinct_pairs(sentences, s.paths, s.path_seed)?;
    let mut smooth = String::from("regime,avg_is,min_is,max_is,paths\n");
    for (regime, model) in [(Regime::Unsupervised, &unsup), (Regime::Supervised, &sup)] {
        let decoded: Vec<Vec<SentenceStructure>> = endpoints
            .iter()
            .map(|(a, b)| decoded_path(model, corpus, &a.vector, &b.vector, s.step))
            .collect::<Result<_>>()?;
        let stats =
            interpolation_smoothness(&decoded, |a, b| prototype_assignment_distance(corpus, a, b))?;
        smooth.push_str(&format!(
            "{},{},{},{},{}\n",
            regime.label(),
            fmt_g17(stats.avg_is),
            fmt_g17(stats.min_is),
            fmt_g17(stats.max_is),
            stats.paths
        ));
    }
    atomic_write_str(&s.out_dir.join("smoothness.csv"), &smooth)?;

    // Paired bootstrap on test accuracy differences.
    let mut boot = String::from("classifier,comparison,p_value\n");
    for kind in ClassifierKind::ALL {
        for (comparison, other) in [
            ("supervised-vs-unsupervised", Regime::Unsupervised),
            ("supervised-vs-baseline", Regime::OptimusLikeBaseline),
        ] {
            let a = &preds[&(kind.label(), Regime::Supervised.label())];
            let b = &preds[&(kind.label(), other.label())];
            let p = bootstrap_significance(a, b, &test_y, s.resamples, s.bootstrap_seed)?;
            boot.push_str(&format!("{},{},{}\n", kind.label(), comparison, fmt_g17(p)));
        }
    }
    atomic_write_str(&s.out_dir.join("bootstrap.csv"), &boot)?;

    println!("eval artifacts in {}", s.out_dir.display());
    Ok(())
}
