//! JSONL wire format for embedded sentences: one record per line with
//! full-precision floats, so a load/save cycle is byte-identical.

use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;

use crate::artifact::atomic_write_str;
use crate::corpus::{EmbeddedSentence, SentenceStructure, Slot};
use crate::error::{Error, Result};
use crate::{fmt_g17, LatentVector};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDoc {
    id: String,
    vec: Vec<f64>,
    labels: Vec<LabelDoc>,
    #[serde(default)]
    text: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelDoc {
    role: String,
    content: String,
}

/// Parses a JSONL dataset, preserving record order. Every malformed record,
/// dimension mismatch, or duplicate id is reported with its 1-based line
/// number.
pub fn load_embeddings(path: &Path) -> Result<Vec<EmbeddedSentence>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let at_line = |message: String| Error::Parse {
            line: Some(line_no),
            message,
        };
        let doc: RecordDoc = serde_json::from_str(line)
            .map_err(|e| at_line(format!("malformed record: {e}")))?;
        match dim {
            None => dim = Some(doc.vec.len()),
            Some(d) if d != doc.vec.len() => {
                return Err(at_line(format!(
                    "vector has {} entries, expected {d}",
                    doc.vec.len()
                )));
            }
            Some(_) => {}
        }
        if !seen_ids.insert(doc.id.clone()) {
            return Err(at_line(format!("duplicate id {}", doc.id)));
        }
        let vector = LatentVector::new(doc.vec)
            .map_err(|e| at_line(format!("invalid vector: {e}")))?;
        let structure = SentenceStructure::new(
            doc.labels
                .into_iter()
                .map(|l| Slot {
                    role: l.role,
                    content: l.content,
                })
                .collect(),
        )
        .map_err(|e| at_line(format!("invalid labels: {e}")))?;
        out.push(EmbeddedSentence {
            id: doc.id,
            vector,
            structure,
            text: doc.text,
        });
    }
    Ok(out)
}

fn push_json_string(out: &mut String, s: &str) {
    // serde_json handles all escaping rules; strings are small.
    out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
}

pub fn dataset_to_string(sentences: &[EmbeddedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str("{\"id\":");
        push_json_string(&mut out, &s.id);
        out.push_str(",\"vec\":[");
        for (i, v) in s.vector.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_g17(*v));
        }
        out.push_str("],\"labels\":[");
        for (i, slot) in s.structure.slots().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("{\"role\":");
            push_json_string(&mut out, &slot.role);
            out.push_str(",\"content\":");
            push_json_string(&mut out, &slot.content);
            out.push('}');
        }
        out.push(']');
        if let Some(text) = &s.text {
            out.push_str(",\"text\":");
            push_json_string(&mut out, text);
        }
        out.push_str("}\n");
    }
    out
}

pub fn save_embeddings(path: &Path, sentences: &[EmbeddedSentence]) -> Result<()> {
    atomic_write_str(path, &dataset_to_string(sentences))
}
