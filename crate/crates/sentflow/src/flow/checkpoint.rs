//! Versioned JSON checkpoints. Floats are written with 17 significant
//! digits, so loading reproduces every parameter bit for bit and reloaded
//! models compute identical outputs.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::artifact::atomic_write_str;
use crate::error::{Error, Result};
use crate::flow::{ActNormLayer, CouplingLayer, FlowBlock, FlowModel, PermutationLayer, SubnetParams};
use crate::fmt_g17;
use crate::linalg::Mat;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
struct CheckpointDoc {
    version: u32,
    dim: usize,
    blocks: Vec<BlockDoc>,
}

#[derive(Debug, Deserialize)]
struct BlockDoc {
    actnorm: ActNormDoc,
    perm: Vec<usize>,
    coupling: CouplingDoc,
}

#[derive(Debug, Deserialize)]
struct ActNormDoc {
    log_scale: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct CouplingDoc {
    clamp: f64,
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
}

fn push_vec(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_g17(*v));
    }
    out.push(']');
}

fn push_mat(out: &mut String, m: &Mat) {
    out.push('[');
    for i in 0..m.rows() {
        if i > 0 {
            out.push(',');
        }
        push_vec(out, m.row(i));
    }
    out.push(']');
}

pub fn checkpoint_to_string(model: &FlowModel) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{{\"version\":{},\"dim\":{},\"blocks\":[",
        CHECKPOINT_VERSION,
        model.dim()
    );
    for (i, block) in model.blocks().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("{\"actnorm\":{\"log_scale\":");
        push_vec(&mut out, block.actnorm.log_scale());
        out.push_str(",\"bias\":");
        push_vec(&mut out, block.actnorm.bias());
        out.push_str("},\"perm\":[");
        for (j, p) in block.permutation.indices().iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{p}");
        }
        out.push_str("],\"coupling\":{\"clamp\":");
        out.push_str(&fmt_g17(block.coupling.clamp));
        out.push_str(",\"w1\":");
        push_mat(&mut out, &block.coupling.subnet.w1);
        out.push_str(",\"b1\":");
        push_vec(&mut out, &block.coupling.subnet.b1);
        out.push_str(",\"w2\":");
        push_mat(&mut out, &block.coupling.subnet.w2);
        out.push_str(",\"b2\":");
        push_vec(&mut out, &block.coupling.subnet.b2);
        out.push_str("}}");
    }
    out.push_str("]}\n");
    out
}

pub fn save_checkpoint(model: &FlowModel, path: &Path) -> Result<()> {
    if !model.is_initialized() {
        return Err(Error::InvalidState(
            "refusing to checkpoint a model with uninitialised actnorms".into(),
        ));
    }
    atomic_write_str(path, &checkpoint_to_string(model))
}

pub fn load_checkpoint(path: &Path) -> Result<FlowModel> {
    let text = std::fs::read_to_string(path)?;
    checkpoint_from_str(&text)
}

pub fn checkpoint_from_str(text: &str) -> Result<FlowModel> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        message: format!("checkpoint is not valid JSON: {e}"),
    })?;
    // The version gate runs before any structural decoding, so a future
    // format fails cleanly instead of producing a half-understood model.
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Parse {
            line: None,
            message: "checkpoint lacks a numeric version field".into(),
        })?;
    if version != u64::from(CHECKPOINT_VERSION) {
        return Err(Error::Version {
            found: version.to_string(),
            supported: CHECKPOINT_VERSION,
        });
    }
    let doc: CheckpointDoc = serde_json::from_value(value).map_err(|e| Error::Parse {
        line: None,
        message: format!("checkpoint structure invalid: {e}"),
    })?;
    debug_assert_eq!(doc.version, CHECKPOINT_VERSION);

    let mut blocks = Vec::with_capacity(doc.blocks.len());
    for b in doc.blocks {
        let actnorm = ActNormLayer::from_params(b.actnorm.log_scale, b.actnorm.bias)?;
        let permutation = PermutationLayer::new(b.perm)?;
        let subnet = SubnetParams {
            w1: rows_to_mat(&b.coupling.w1, "w1")?,
            b1: b.coupling.b1,
            w2: rows_to_mat(&b.coupling.w2, "w2")?,
            b2: b.coupling.b2,
        };
        let coupling = CouplingLayer::new(subnet, b.coupling.clamp)?;
        blocks.push(FlowBlock {
            actnorm,
            permutation,
            coupling,
        });
    }
    FlowModel::from_blocks(doc.dim, blocks)
}

fn rows_to_mat(rows: &[Vec<f64>], what: &str) -> Result<Mat> {
    if rows.is_empty() {
        return Err(Error::Parse {
            line: None,
            message: format!("checkpoint matrix {what} is empty"),
        });
    }
    let cols = rows[0].len();
    for r in rows {
        if r.len() != cols {
            return Err(Error::Parse {
                line: None,
                message: format!("checkpoint matrix {what} has ragged rows"),
            });
        }
    }
    Ok(Mat::from_rows(rows))
}
