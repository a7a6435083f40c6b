//! Fixed coordinate permutation between blocks, so successive couplings see
//! different halves. Volume-preserving: the log-determinant is always zero.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PermutationLayer {
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl PermutationLayer {
    /// `perm` maps output position to input position: y[i] = x[perm[i]].
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let d = perm.len();
        let mut inv = vec![usize::MAX; d];
        for (i, &p) in perm.iter().enumerate() {
            if p >= d {
                return Err(Error::InvalidParameter(format!(
                    "permutation index {p} out of range for dimension {d}"
                )));
            }
            if inv[p] != usize::MAX {
                return Err(Error::InvalidParameter(format!(
                    "permutation repeats index {p}"
                )));
            }
            inv[p] = i;
        }
        Ok(PermutationLayer { perm, inv })
    }

    pub fn identity(dim: usize) -> Self {
        PermutationLayer {
            perm: (0..dim).collect(),
            inv: (0..dim).collect(),
        }
    }

    /// Fisher-Yates shuffle driven by the caller's RNG.
    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..dim).collect();
        for i in (1..dim).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        Self::new(perm).expect("shuffled identity is a valid permutation")
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.perm
    }

    pub(crate) fn inverse_indices(&self) -> &[usize] {
        &self.inv
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "permutation input".into(),
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(self.perm.iter().map(|&p| x[p]).collect())
    }

    pub fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y.len())?;
        Ok(self.inv.iter().map(|&p| y[p]).collect())
    }
}
