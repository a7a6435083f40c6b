//! Crate-wide error type. Variants group into the four failure classes the
//! CLI maps to exit codes: configuration, I/O and artifact parsing, numeric
//! breakdown, and violated invariants.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or spec value is out of its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two pieces of data disagree on dimension or length.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    /// Input data is structurally unusable (too few samples, missing labels).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A role or content is not part of the declared vocabulary.
    #[error("unknown {kind}: {name}")]
    UnknownSymbol { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A data file failed to parse; `line` is 1-based where applicable.
    #[error("parse error{}: {message}", match line { Some(n) => format!(" at line {n}"), None => String::new() })]
    Parse { line: Option<usize>, message: String },

    /// A checkpoint carries a version tag this build does not understand.
    #[error("unsupported checkpoint version {found}, expected {supported}")]
    Version { found: String, supported: u32 },

    /// A computation produced or received a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Input is degenerate for the requested operation (zero variance, rank 0).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An object was used in a state its contract forbids.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A postcondition or internal invariant failed to hold.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Ensures every entry of `values` is finite.
    pub(crate) fn check_finite(values: &[f64], context: &str) -> Result<()> {
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite value {v} at index {i} in {context}"
                )));
            }
        }
        Ok(())
    }
}
