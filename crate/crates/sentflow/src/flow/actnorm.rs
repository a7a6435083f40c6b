//! Per-dimension affine normalisation with data-dependent initialisation.
//! The first batch fixes scale and bias so that outputs have zero mean and
//! unit variance per dimension; afterwards both are ordinary trainable
//! parameters.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ActNormLayer {
    log_scale: Vec<f64>,
    bias: Vec<f64>,
    initialized: bool,
}

impl ActNormLayer {
    pub fn uninitialized(dim: usize) -> Self {
        ActNormLayer {
            log_scale: vec![0.0; dim],
            bias: vec![0.0; dim],
            initialized: false,
        }
    }

    /// Builds an already-initialised layer from explicit parameters, as when
    /// loading a checkpoint.
    pub fn from_params(log_scale: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if log_scale.len() != bias.len() {
            return Err(Error::DimensionMismatch {
                context: "actnorm parameters".into(),
                expected: log_scale.len(),
                got: bias.len(),
            });
        }
        Error::check_finite(&log_scale, "actnorm log_scale")?;
        Error::check_finite(&bias, "actnorm bias")?;
        Ok(ActNormLayer {
            log_scale,
            bias,
            initialized: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.log_scale.len()
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn log_scale(&self) -> &[f64] {
        &self.log_scale
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.log_scale, &mut self.bias)
    }

    /// Sets scale and bias from per-dimension batch statistics (population
    /// variance) so the transformed batch is standardised. Fails on a second
    /// call or on a dimension with zero variance.
    pub fn initialize(&mut self, batch: &[Vec<f64>]) -> Result<()> {
        if self.initialized {
            return Err(Error::InvalidState(
                "actnorm layer is already initialized".into(),
            ));
        }
        if batch.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "actnorm initialisation needs at least 2 samples, got {}",
                batch.len()
            )));
        }
        let d = self.dim();
        let n = batch.len() as f64;
        for (j, x) in batch.iter().enumerate() {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    context: format!("actnorm init sample {j}"),
                    expected: d,
                    got: x.len(),
                });
            }
        }
        for j in 0..d {
            let mean = batch.iter().map(|x| x[j]).sum::<f64>() / n;
            let var = batch.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / n;
            if !(var.is_finite() && var > 0.0) {
                return Err(Error::Degenerate(format!(
                    "zero or non-finite variance in dimension {j} during actnorm initialisation"
                )));
            }
            let std = var.sqrt();
            self.log_scale[j] = -std.ln();
            self.bias[j] = -mean / std;
        }
        self.initialized = true;
        Ok(())
    }

    fn check_ready(&self, len: usize) -> Result<()> {
        if !self.initialized {
            return Err(Error::InvalidState(
                "actnorm layer applied before initialisation".into(),
            ));
        }
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "actnorm input".into(),
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// y = exp(log_scale) . x + bias. The log-determinant does not depend on
    /// the input.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_ready(x.len())?;
        let y = x
            .iter()
            .zip(self.log_scale.iter().zip(&self.bias))
            .map(|(&xi, (&ls, &b))| ls.exp() * xi + b)
            .collect();
        Ok((y, self.logdet()))
    }

    pub fn inverse(&self, y: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_ready(y.len())?;
        let x = y
            .iter()
            .zip(self.log_scale.iter().zip(&self.bias))
            .map(|(&yi, (&ls, &b))| (yi - b) / ls.exp())
            .collect();
        Ok((x, -self.logdet()))
    }

    pub(crate) fn logdet(&self) -> f64 {
        self.log_scale.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_parameters_act_as_identity() {
        let layer = ActNormLayer::from_params(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let (y, logdet) = layer.forward(&[1.5, -0.5]).unwrap();
        assert_eq!(y, vec![1.5, -0.5]);
        assert_eq!(logdet, 0.0);
    }

    #[test]
    fn hand_computed_case() {
        let ln3 = 3.0f64.ln();
        let layer = ActNormLayer::from_params(vec![ln3, 0.0], vec![1.0, -1.0]).unwrap();
        let (y, logdet) = layer.forward(&[1.0, 1.0]).unwrap();
        assert_relative_eq!(y[0], 4.0, max_relative = 1e-15);
        assert_eq!(y[1], 0.0);
        assert_relative_eq!(logdet, ln3, max_relative = 1e-15);
        let (x, inv_ld) = layer.inverse(&y).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 1.0, max_relative = 1e-14);
        assert_eq!(inv_ld, -logdet);
    }

    #[test]
    fn initialisation_standardises_the_batch() {
        let mut layer = ActNormLayer::uninitialized(1);
        layer.initialize(&[vec![2.0], vec![4.0]]).unwrap();
        // mean 3, population std 1
        assert_relative_eq!(layer.bias()[0], -3.0, max_relative = 1e-15);
        assert_relative_eq!(layer.log_scale()[0], 0.0, epsilon = 1e-15);
        let (a, _) = layer.forward(&[2.0]).unwrap();
        let (b, _) = layer.forward(&[4.0]).unwrap();
        assert_relative_eq!(a[0], -1.0, max_relative = 1e-14);
        assert_relative_eq!(b[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn initialised_outputs_have_zero_mean_unit_variance() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha20Rng;
        use rand_distr::StandardNormal;
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let d = 6;
        let batch: Vec<Vec<f64>> = (0..64)
            .map(|_| {
                (0..d)
                    .map(|j| {
                        let g: f64 = rng.sample(StandardNormal);
                        g * (j as f64 + 0.5) + j as f64
                    })
                    .collect()
            })
            .collect();
        let mut layer = ActNormLayer::uninitialized(d);
        layer.initialize(&batch).unwrap();
        let outs: Vec<Vec<f64>> = batch
            .iter()
            .map(|x| layer.forward(x).unwrap().0)
            .collect();
        let n = outs.len() as f64;
        for j in 0..d {
            let mean = outs.iter().map(|y| y[j]).sum::<f64>() / n;
            let var = outs.iter().map(|y| (y[j] - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-10, "mean {mean} in dim {j}");
            assert!((var - 1.0).abs() < 1e-10, "var {var} in dim {j}");
        }
    }

    #[test]
    fn logdet_ignores_the_input() {
        let layer = ActNormLayer::from_params(vec![0.3, -0.7], vec![0.1, 0.2]).unwrap();
        let (_, ld1) = layer.forward(&[0.0, 0.0]).unwrap();
        let (_, ld2) = layer.forward(&[100.0, -55.0]).unwrap();
        assert_eq!(ld1, ld2);
    }

    #[test]
    fn state_and_degeneracy_errors() {
        let mut layer = ActNormLayer::uninitialized(1);
        assert!(matches!(
            layer.forward(&[1.0]),
            Err(Error::InvalidState(_))
        ));
        assert!(matches!(
            layer.initialize(&[vec![2.0], vec![2.0]]),
            Err(Error::Degenerate(_))
        ));
        layer.initialize(&[vec![2.0], vec![4.0]]).unwrap();
        assert!(matches!(
            layer.initialize(&[vec![0.0], vec![1.0]]),
            Err(Error::InvalidState(_))
        ));
    }
}
