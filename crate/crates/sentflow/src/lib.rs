//! Invertible normalizing flows over fixed-dimension sentence embeddings.
//!
//! The crate is organised around a stack of coupling blocks ([`flow`]) that
//! maps embedding vectors to a latent space and back, exactly. On top of that
//! sit maximum-likelihood training with optional cluster supervision
//! ([`train`]), a synthetic role-labelled corpus with an exact decoder
//! ([`corpus`]), latent-space operators such as interpolation, neighbourhood
//! traversal, augmentation and PCA ([`geometry`]), and an evaluation suite of
//! classifier proxies, round-trip ratios, interpolation smoothness and paired
//! bootstrap tests ([`eval`]).
//!
//! Everything that consumes randomness takes an explicit seed; identical
//! seeds give bitwise-identical results on a given build.

pub mod artifact;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod train;
mod vector;

pub use error::{Error, Result};
pub use vector::LatentVector;

/// Formats a float with 17 significant digits, the round-trip-exact form
/// used by every artifact this crate writes.
pub fn fmt_g17(x: f64) -> String {
    format!("{:.16e}", x)
}
