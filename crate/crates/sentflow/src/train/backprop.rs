//! Exact reverse-mode gradients through the flow stack, written out layer by
//! layer. Batch gradients accumulate in sample order and are then scaled by
//! 1/n, so a given batch always produces bitwise-identical results.

use crate::error::{Error, Result};
use crate::flow::{BlockCache, FlowBlock, FlowModel};
use crate::linalg::Mat;
use crate::train::loss::{loss_cluster_supervised, loss_unsupervised};

/// Per-sample supervision handed to the backward pass. `Standard` scores
/// against N(0, I); `Cluster` against N(mu, (1 - sigma2) I).
#[derive(Debug, Clone, Copy)]
pub enum SampleTarget<'a> {
    Standard,
    Cluster { mu: &'a [f64], sigma2: f64 },
}

/// Gradients for one block, same shapes as the block's parameters.
#[derive(Debug, Clone)]
pub struct BlockGrads {
    pub actnorm_log_scale: Vec<f64>,
    pub actnorm_bias: Vec<f64>,
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GradientSet {
    pub blocks: Vec<BlockGrads>,
}

impl GradientSet {
    pub fn zeros_like(model: &FlowModel) -> Self {
        let blocks = model
            .blocks()
            .iter()
            .map(|b| {
                let d = b.actnorm.dim();
                let net = &b.coupling.subnet;
                BlockGrads {
                    actnorm_log_scale: vec![0.0; d],
                    actnorm_bias: vec![0.0; d],
                    w1: Mat::zeros(net.w1.rows(), net.w1.cols()),
                    b1: vec![0.0; net.b1.len()],
                    w2: Mat::zeros(net.w2.rows(), net.w2.cols()),
                    b2: vec![0.0; net.b2.len()],
                }
            })
            .collect();
        GradientSet { blocks }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, t) in self.named_tensors_mut() {
            for v in t {
                *v *= factor;
            }
        }
    }

    /// Tensors in the fixed optimisation order used everywhere: per block,
    /// actnorm log-scale and bias, then the conditioner weights and biases.
    pub fn named_tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(6 * self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            out.push((format!("block{i}.actnorm.log_scale"), &b.actnorm_log_scale[..]));
            out.push((format!("block{i}.actnorm.bias"), &b.actnorm_bias[..]));
            out.push((format!("block{i}.coupling.w1"), b.w1.as_slice()));
            out.push((format!("block{i}.coupling.b1"), &b.b1[..]));
            out.push((format!("block{i}.coupling.w2"), b.w2.as_slice()));
            out.push((format!("block{i}.coupling.b2"), &b.b2[..]));
        }
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::with_capacity(6 * self.blocks.len());
        for (i, b) in self.blocks.iter_mut().enumerate() {
            out.push((
                format!("block{i}.actnorm.log_scale"),
                &mut b.actnorm_log_scale[..],
            ));
            out.push((format!("block{i}.actnorm.bias"), &mut b.actnorm_bias[..]));
            out.push((format!("block{i}.coupling.w1"), b.w1.as_mut_slice()));
            out.push((format!("block{i}.coupling.b1"), &mut b.b1[..]));
            out.push((format!("block{i}.coupling.w2"), b.w2.as_mut_slice()));
            out.push((format!("block{i}.coupling.b2"), &mut b.b2[..]));
        }
        out
    }
}

impl FlowModel {
    /// Parameter tensors in the same order as [`GradientSet::named_tensors`];
    /// an optimiser zips the two.
    pub fn named_param_tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::with_capacity(6 * self.n_blocks());
        for (i, b) in self.blocks_mut().iter_mut().enumerate() {
            let (log_scale, bias) = b.actnorm.params_mut();
            out.push((format!("block{i}.actnorm.log_scale"), log_scale));
            out.push((format!("block{i}.actnorm.bias"), bias));
            let net = &mut b.coupling.subnet;
            out.push((format!("block{i}.coupling.w1"), net.w1.as_mut_slice()));
            out.push((format!("block{i}.coupling.b1"), &mut net.b1[..]));
            out.push((format!("block{i}.coupling.w2"), net.w2.as_mut_slice()));
            out.push((format!("block{i}.coupling.b2"), &mut net.b2[..]));
        }
        out
    }
}

/// Mean loss over the batch and the gradient of that mean with respect to
/// every model parameter. Cluster centres are treated as constants.
pub fn backprop_gradients(
    model: &FlowModel,
    batch: &[(&[f64], SampleTarget)],
) -> Result<(GradientSet, f64)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let mut grads = GradientSet::zeros_like(model);
    let mut loss_sum = 0.0;
    for (x, target) in batch {
        let (z, logdet, caches) = model.forward_cached(x)?;
        let (loss, mut grad) = match target {
            SampleTarget::Standard => {
                let loss = loss_unsupervised(&z, logdet)?;
                (loss, z.clone())
            }
            SampleTarget::Cluster { mu, sigma2 } => {
                let loss = loss_cluster_supervised(&z, logdet, mu, *sigma2)?;
                let inv_var = 1.0 / (1.0 - sigma2);
                let g = z.iter().zip(*mu).map(|(&a, &b)| (a - b) * inv_var).collect();
                (loss, g)
            }
        };
        loss_sum += loss;
        // d loss / d logdet = -1 for both objectives.
        let grad_logdet = -1.0;
        for i in (0..model.n_blocks()).rev() {
            grad = backward_block(
                &model.blocks()[i],
                &caches[i],
                &grad,
                grad_logdet,
                &mut grads.blocks[i],
            );
        }
    }
    let inv_n = 1.0 / batch.len() as f64;
    grads.scale(inv_n);
    Ok((grads, loss_sum * inv_n))
}

/// Propagates `grad_y` through one block in reverse, accumulating parameter
/// gradients, and returns the gradient with respect to the block input.
fn backward_block(
    block: &FlowBlock,
    cache: &BlockCache,
    grad_y: &[f64],
    grad_logdet: f64,
    grads: &mut BlockGrads,
) -> Vec<f64> {
    let d = grad_y.len();
    let k = d / 2;
    let cc = &cache.coupling;
    let net = &block.coupling.subnet;
    let clamp = block.coupling.clamp;

    // Coupling: y_a = s . x_a + t, y_b = x_b, logdet += sum(log_s).
    let (gya, gyb) = grad_y.split_at(k);
    let mut grad_raw = vec![0.0; 2 * k];
    for i in 0..k {
        // Through log_s: the affine term and the logdet term.
        let g_log_s = gya[i] * cc.s[i] * cc.x_a[i] + grad_logdet;
        let th = (cc.subnet.raw_s[i] / clamp).tanh();
        grad_raw[i] = g_log_s * (1.0 - th * th);
        // Through t.
        grad_raw[k + i] = gya[i];
    }
    grads.w2.add_outer(&grad_raw, &cc.subnet.hidden);
    for (g, r) in grads.b2.iter_mut().zip(&grad_raw) {
        *g += r;
    }
    let grad_hidden = net.w2.matvec_t(&grad_raw);
    let grad_pre: Vec<f64> = grad_hidden
        .iter()
        .zip(&cc.subnet.pre)
        .map(|(&g, &p)| if p > 0.0 { g } else { 0.0 })
        .collect();
    grads.w1.add_outer(&grad_pre, &cc.x_b);
    for (g, r) in grads.b1.iter_mut().zip(&grad_pre) {
        *g += r;
    }
    let grad_xb_net = net.w1.matvec_t(&grad_pre);
    let mut grad_perm_out = vec![0.0; d];
    for i in 0..k {
        grad_perm_out[i] = gya[i] * cc.s[i];
        grad_perm_out[k + i] = gyb[i] + grad_xb_net[i];
    }

    // Permutation: gradient flows through the inverse gather.
    let inv = block.permutation.inverse_indices();
    let grad_act_out: Vec<f64> = inv.iter().map(|&p| grad_perm_out[p]).collect();

    // ActNorm: y = exp(log_scale) . x + bias, logdet += sum(log_scale).
    let log_scale = block.actnorm.log_scale();
    let mut grad_x = vec![0.0; d];
    for j in 0..d {
        let s = log_scale[j].exp();
        grads.actnorm_log_scale[j] += grad_act_out[j] * s * cache.actnorm_in[j] + grad_logdet;
        grads.actnorm_bias[j] += grad_act_out[j];
        grad_x[j] = grad_act_out[j] * s;
    }
    grad_x
}
