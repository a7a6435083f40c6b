//! The conditioner network inside a coupling layer: a two-layer MLP with
//! ReLU hidden units whose output is split into a scale head and a shift
//! head. The scale head is soft-clamped, `log_s = c * tanh(raw / c)`, so a
//! single step can never produce an exploding Jacobian.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Parameters of the conditioner MLP for one coupling layer.
///
/// Shapes for input half-width `k` and hidden width `h`:
/// `w1: h x k`, `b1: h`, `w2: 2k x h`, `b2: 2k`. The first `k` output rows
/// feed the scale head, the last `k` the shift head.
#[derive(Debug, Clone, PartialEq)]
pub struct SubnetParams {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct SubnetEval {
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub raw_s: Vec<f64>,
    pub log_s: Vec<f64>,
    pub t: Vec<f64>,
}

impl SubnetParams {
    /// All-zero parameters; the coupling layer built on top is the identity.
    pub fn zeros(half: usize, hidden: usize) -> Self {
        SubnetParams {
            w1: Mat::zeros(hidden, half),
            b1: vec![0.0; hidden],
            w2: Mat::zeros(2 * half, hidden),
            b2: vec![0.0; 2 * half],
        }
    }

    /// Random first layer, zero output layer. Training starts from an
    /// identity coupling but with a usable hidden representation.
    pub fn seeded<R: Rng>(half: usize, hidden: usize, rng: &mut R) -> Self {
        let std = (2.0 / half as f64).sqrt();
        let mut w1 = Mat::zeros(hidden, half);
        for v in w1.as_mut_slice() {
            let g: f64 = rng.sample(StandardNormal);
            *v = g * std;
        }
        SubnetParams {
            w1,
            b1: vec![0.0; hidden],
            w2: Mat::zeros(2 * half, hidden),
            b2: vec![0.0; 2 * half],
        }
    }

    pub fn half_width(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_width(&self) -> usize {
        self.w1.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.half_width();
        let h = self.hidden_width();
        if k == 0 || h == 0 {
            return Err(Error::InvalidParameter(
                "subnet requires nonzero input and hidden widths".into(),
            ));
        }
        let checks = [
            ("b1", self.b1.len(), h),
            ("w2 rows", self.w2.rows(), 2 * k),
            ("w2 cols", self.w2.cols(), h),
            ("b2", self.b2.len(), 2 * k),
        ];
        for (what, got, expected) in checks {
            if got != expected {
                return Err(Error::DimensionMismatch {
                    context: format!("subnet {what}"),
                    expected,
                    got,
                });
            }
        }
        for (name, vals) in [
            ("w1", self.w1.as_slice()),
            ("b1", &self.b1[..]),
            ("w2", self.w2.as_slice()),
            ("b2", &self.b2[..]),
        ] {
            Error::check_finite(vals, &format!("subnet {name}"))?;
        }
        Ok(())
    }

    /// Evaluates the conditioner on one half-vector, returning the clamped
    /// log-scales and shifts, each of length `half_width()`.
    pub fn eval(&self, x_half: &[f64], clamp: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if x_half.len() != self.half_width() {
            return Err(Error::DimensionMismatch {
                context: "subnet input".into(),
                expected: self.half_width(),
                got: x_half.len(),
            });
        }
        let ev = self.eval_cached(x_half, clamp);
        Ok((ev.log_s, ev.t))
    }

    pub(crate) fn eval_cached(&self, x_half: &[f64], clamp: f64) -> SubnetEval {
        let k = self.half_width();
        let mut pre = self.w1.matvec(x_half);
        for (p, b) in pre.iter_mut().zip(&self.b1) {
            *p += b;
        }
        let hidden: Vec<f64> = pre.iter().map(|&p| if p > 0.0 { p } else { 0.0 }).collect();
        let mut out = self.w2.matvec(&hidden);
        for (o, b) in out.iter_mut().zip(&self.b2) {
            *o += b;
        }
        let t = out.split_off(k);
        let raw_s = out;
        let log_s: Vec<f64> = raw_s.iter().map(|&r| clamp * (r / clamp).tanh()).collect();
        SubnetEval {
            pre,
            hidden,
            raw_s,
            log_s,
            t,
        }
    }
}
