//! AdamW with decoupled weight decay. Moments live in a per-tensor map keyed
//! by tensor name, so the update is independent of iteration order.

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-2,
        }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive and finite, got {}",
                self.lr
            )));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1), got {beta}"
                )));
            }
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive and finite, got {}",
                self.eps
            )));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "weight decay must be nonnegative and finite, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct TensorMoments {
    m: Vec<f64>,
    v: Vec<f64>,
}

/// First/second moments per tensor plus the shared step counter.
#[derive(Debug, Clone, Default)]
pub struct AdamWState {
    step: u64,
    tensors: HashMap<String, TensorMoments>,
}

impl AdamWState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One optimisation step over every named tensor. `params` and `grads` must
/// cover the same names with matching shapes; each tensor updates purely from
/// its own moments, so listing order never changes the result.
pub fn adamw_step(
    params: Vec<(String, &mut [f64])>,
    grads: &[(String, &[f64])],
    state: &mut AdamWState,
    config: &AdamWConfig,
) -> Result<()> {
    config.validate()?;
    if params.len() != grads.len() {
        return Err(Error::InvalidInput(format!(
            "optimiser got {} parameter tensors but {} gradient tensors",
            params.len(),
            grads.len()
        )));
    }
    let grad_by_name: HashMap<&str, &[f64]> =
        grads.iter().map(|(n, g)| (n.as_str(), *g)).collect();
    state.step += 1;
    let t = state.step as f64;
    let bias1 = 1.0 - config.beta1.powf(t);
    let bias2 = 1.0 - config.beta2.powf(t);
    for (name, p) in params {
        let g = *grad_by_name.get(name.as_str()).ok_or_else(|| Error::UnknownSymbol {
            kind: "gradient tensor",
            name: name.clone(),
        })?;
        if g.len() != p.len() {
            return Err(Error::DimensionMismatch {
                context: format!("optimiser tensor {name}"),
                expected: p.len(),
                got: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient in tensor {name}"
            )));
        }
        let moments = state
            .tensors
            .entry(name.clone())
            .or_insert_with(|| TensorMoments {
                m: vec![0.0; p.len()],
                v: vec![0.0; p.len()],
            });
        if moments.m.len() != p.len() {
            return Err(Error::DimensionMismatch {
                context: format!("optimiser state for tensor {name}"),
                expected: moments.m.len(),
                got: p.len(),
            });
        }
        for i in 0..p.len() {
            moments.m[i] = config.beta1 * moments.m[i] + (1.0 - config.beta1) * g[i];
            moments.v[i] = config.beta2 * moments.v[i] + (1.0 - config.beta2) * g[i] * g[i];
            let m_hat = moments.m[i] / bias1;
            let v_hat = moments.v[i] / bias2;
            p[i] -= config.lr * (m_hat / (v_hat.sqrt() + config.eps) + config.weight_decay * p[i]);
        }
    }
    Ok(())
}
