//! Affine coupling: the first half of the vector is scaled and shifted by
//! functions of the second half, which passes through untouched. Inversion
//! re-evaluates the conditioner on the untouched half, so round trips are
//! exact up to floating-point rounding.

use crate::error::{Error, Result};
use crate::flow::subnet::{SubnetEval, SubnetParams};

#[derive(Debug, Clone)]
pub struct CouplingLayer {
    pub subnet: SubnetParams,
    pub clamp: f64,
}

/// Forward activations needed to backpropagate through one coupling layer.
#[derive(Debug, Clone)]
pub(crate) struct CouplingCache {
    pub x_a: Vec<f64>,
    pub x_b: Vec<f64>,
    pub s: Vec<f64>,
    pub subnet: SubnetEval,
}

impl CouplingLayer {
    pub fn new(subnet: SubnetParams, clamp: f64) -> Result<Self> {
        if !(clamp.is_finite() && clamp > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling clamp must be finite and positive, got {clamp}"
            )));
        }
        subnet.validate()?;
        Ok(CouplingLayer { subnet, clamp })
    }

    pub fn identity(half: usize, hidden: usize, clamp: f64) -> Self {
        CouplingLayer {
            subnet: SubnetParams::zeros(half, hidden),
            clamp,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.subnet.half_width()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "coupling input".into(),
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// y_a = exp(log_s) . x_a + t, y_b = x_b. Returns (y, sum(log_s)).
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let (y, logdet, _) = self.forward_cached(x)?;
        Ok((y, logdet))
    }

    pub(crate) fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, f64, CouplingCache)> {
        self.check_dim(x.len())?;
        let k = self.subnet.half_width();
        let (x_a, x_b) = x.split_at(k);
        let ev = self.subnet.eval_cached(x_b, self.clamp);
        let s: Vec<f64> = ev.log_s.iter().map(|&l| l.exp()).collect();
        let mut y = Vec::with_capacity(x.len());
        for i in 0..k {
            y.push(s[i] * x_a[i] + ev.t[i]);
        }
        y.extend_from_slice(x_b);
        let logdet = self.logdet_from(&ev.log_s);
        let cache = CouplingCache {
            x_a: x_a.to_vec(),
            x_b: x_b.to_vec(),
            s,
            subnet: ev,
        };
        Ok((y, logdet, cache))
    }

    /// x_a = (y_a - t) / exp(log_s), x_b = y_b. Returns (x, -sum(log_s)).
    pub fn inverse(&self, y: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_dim(y.len())?;
        let k = self.subnet.half_width();
        let (y_a, y_b) = y.split_at(k);
        let ev = self.subnet.eval_cached(y_b, self.clamp);
        let mut x = Vec::with_capacity(y.len());
        for i in 0..k {
            let s = ev.log_s[i].exp();
            x.push((y_a[i] - ev.t[i]) / s);
        }
        x.extend_from_slice(y_b);
        Ok((x, -self.logdet_from(&ev.log_s)))
    }

    /// Shared by both directions so forward and inverse log-determinants are
    /// exact bitwise negations of each other.
    fn logdet_from(&self, log_s: &[f64]) -> f64 {
        log_s.iter().sum()
    }
}
