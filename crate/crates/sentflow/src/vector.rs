//! The embedding/latent vector type shared across modules.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite real vector of fixed even dimension. Both embedding-space and
/// latent-space points use this type; the flow maps between them without
/// changing dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentVector(Vec<f64>);

impl LatentVector {
    /// Validates finiteness and even, nonzero dimension.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "vector dimension must be even and nonzero, got {}",
                values.len()
            )));
        }
        Error::check_finite(&values, "latent vector")?;
        Ok(LatentVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LatentVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for LatentVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_empty_and_non_finite() {
        assert!(LatentVector::new(vec![]).is_err());
        assert!(LatentVector::new(vec![1.0]).is_err());
        assert!(LatentVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(LatentVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(LatentVector::new(vec![1.0, 2.0]).is_ok());
    }
}
