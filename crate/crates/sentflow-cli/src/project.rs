//! `project`: PCA over the corpus embeddings, written as a coordinate CSV
//! plus a ready-to-open SVG scatter coloured by role content.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use sentflow::artifact::atomic_write_str;
use sentflow::corpus::load_embeddings;
use sentflow::geometry::pca_project;
use sentflow::{fmt_g17, Error, LatentVector, Result};

use crate::common::{echo_config, name_io, require, role_labels, with_overlay, Overlay};
use crate::svg::{scatter_svg, ScatterPoint};

#[derive(Debug, Default, clap::Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectArgs {
    /// JSON file whose keys mirror these flags; explicit flags win.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Corpus JSONL produced by gen-corpus.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Number of principal components to keep (at least 2).
    #[arg(long)]
    pub components: Option<usize>,
    /// Role whose contents colour the scatter points.
    #[arg(long)]
    pub role: Option<String>,
    /// Directory for pca.csv, pca.svg and config.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

impl Overlay for ProjectArgs {
    fn take_config(&mut self) -> Option<PathBuf> {
        self.config.take()
    }

    fn or(self, fb: Self) -> Self {
        ProjectArgs {
            config: None,
            corpus: self.corpus.or(fb.corpus),
            components: self.components.or(fb.components),
            role: self.role.or(fb.role),
            out_dir: self.out_dir.or(fb.out_dir),
        }
    }
}

/// Effective post-merge settings, echoed to config.json.
#[derive(Debug, Serialize)]
struct ProjectSettings {
    corpus: PathBuf,
    components: usize,
    role: String,
    out_dir: PathBuf,
}

pub fn run(args: ProjectArgs) -> Result<()> {
    let args = with_overlay(args)?;
    let s = ProjectSettings {
        corpus: require(args.corpus, "--corpus")?,
        components: args.components.unwrap_or(2),
        role: args.role.unwrap_or_else(|| "ARG0".into()),
        out_dir: require(args.out_dir, "--out-dir")?,
    };
    if s.components < 2 {
        return Err(Error::InvalidParameter(format!(
            "the scatter plot needs at least 2 components, got {}",
            s.components
        )));
    }

    let sentences = name_io(load_embeddings(&s.corpus), &s.corpus)?;
    if sentences.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} holds no sentences",
            s.corpus.display()
        )));
    }
    let labels = role_labels(&sentences, &s.role)?;
    let data: Vec<LatentVector> = sentences.iter().map(|x| x.vector.clone()).collect();
    let proj = pca_project(&data, s.components)?;

    std::fs::create_dir_all(&s.out_dir)?;
    echo_config(&s.out_dir, "project", &s)?;

    let mut csv = String::from("id");
    for j in 0..s.components {
        csv.push_str(&format!(",c{j}"));
    }
    csv.push_str(",label\n");
    for (i, sent) in sentences.iter().enumerate() {
        csv.push_str(&sent.id);
        for v in &proj.projected[i] {
            csv.push(',');
            csv.push_str(&fmt_g17(*v));
        }
        csv.push(',');
        csv.push_str(&labels[i]);
        csv.push('\n');
    }
    atomic_write_str(&s.out_dir.join("pca.csv"), &csv)?;

    let mut class_of: BTreeMap<&str, usize> = BTreeMap::new();
    for label in &labels {
        let next = class_of.len();
        class_of.entry(label.as_str()).or_insert(next);
    }
    // BTreeMap assigns first-seen indices but iterates sorted; rebuild the
    // legend in index order.
    let mut classes = vec![String::new(); class_of.len()];
    for (label, &idx) in &class_of {
        classes[idx] = (*label).to_string();
    }
    let points: Vec<ScatterPoint> = labels
        .iter()
        .enumerate()
        .map(|(i, label)| ScatterPoint {
            x: proj.projected[i][0],
            y: proj.projected[i][1],
            class: class_of[label.as_str()],
        })
        .collect();
    let title = format!(
        "{}: c0 {:.1}%, c1 {:.1}% of variance",
        s.role,
        proj.explained[0] * 100.0,
        proj.explained[1] * 100.0
    );
    atomic_write_str(
        &s.out_dir.join("pca.svg"),
        &scatter_svg(&points, &classes, &title),
    )?;
    println!(
        "projected {} sentences onto {} components in {}",
        sentences.len(),
        s.components,
        s.out_dir.display()
    );
    Ok(())
}
