//! Tabular report rows pairing a classifier with the embedding regime it
//! was scored under, plus CSV/JSON emitters with byte-stable formatting.

use serde::Serialize;

use crate::error::Result;
use crate::fmt_g17;

use super::classify::ClassifierKind;
use super::metrics::MacroReport;

/// Which embedding space the classifier saw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Raw sentence embeddings, no flow applied.
    OptimusLikeBaseline,
    /// Latents of a flow trained without cluster labels.
    Unsupervised,
    /// Latents of a flow trained against cluster centroids.
    Supervised,
}

impl Regime {
    pub const ALL: [Regime; 3] = [
        Regime::OptimusLikeBaseline,
        Regime::Unsupervised,
        Regime::Supervised,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Regime::OptimusLikeBaseline => "optimus-like-baseline",
            Regime::Unsupervised => "unsupervised",
            Regime::Supervised => "supervised",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One scored (classifier, regime) cell of the separability table.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifierRow {
    pub classifier: &'static str,
    pub regime: Regime,
    pub report: MacroReport,
}

impl ClassifierRow {
    pub fn new(kind: ClassifierKind, regime: Regime, report: MacroReport) -> Self {
        ClassifierRow {
            classifier: kind.label(),
            regime,
            report,
        }
    }
}

/// CSV with header `classifier,regime,accuracy,precision,recall,f1`.
/// Floats are written with 17 significant digits so the table re-reads to
/// the exact values.
pub fn rows_to_csv(rows: &[ClassifierRow]) -> String {
    let mut out = String::from("classifier,regime,accuracy,precision,recall,f1\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.classifier,
            row.regime.label(),
            fmt_g17(row.report.accuracy),
            fmt_g17(row.report.precision),
            fmt_g17(row.report.recall),
            fmt_g17(row.report.f1),
        ));
    }
    out
}

/// Pretty JSON array of the rows, including per-class breakdowns.
pub fn rows_to_json(rows: &[ClassifierRow]) -> Result<String> {
    let mut text = serde_json::to_string_pretty(rows).map_err(|e| {
        crate::error::Error::Numeric(format!("report serialization failed: {e}"))
    })?;
    text.push('\n');
    Ok(text)
}
