//! Negative log-likelihood objectives under the change of variables. The
//! unsupervised loss scores latents against a standard Gaussian; the
//! cluster-supervised loss scores them against a Gaussian centred on the
//! sample's cluster with shrunk variance 1 - sigma^2, which pulls members of
//! a cluster together while the log-determinant term keeps the map honest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::LatentVector;

/// Default cluster variance parameter; the supervised target variance is
/// 1 - sigma^2 = 0.4.
pub const DEFAULT_SIGMA2: f64 = 0.6;

/// Supervision target for one role-content cluster.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub role: String,
    pub content: String,
    pub mu: LatentVector,
    pub sigma2: f64,
}

impl ClusterSpec {
    pub fn new(role: String, content: String, mu: LatentVector, sigma2: f64) -> Result<Self> {
        check_sigma2(sigma2)?;
        Ok(ClusterSpec {
            role,
            content,
            mu,
            sigma2,
        })
    }
}

pub(crate) fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2.is_finite() && sigma2 > 0.0 && sigma2 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must lie strictly inside (0, 1), got {sigma2}"
        )));
    }
    Ok(())
}

fn ln_2pi() -> f64 {
    (2.0 * std::f64::consts::PI).ln()
}

/// 0.5 ||z||^2 - logdet + (d/2) ln(2 pi), the exact NLL of x under the
/// pushforward of a standard Gaussian.
pub fn loss_unsupervised(z: &[f64], total_logdet: f64) -> Result<f64> {
    Error::check_finite(z, "loss input z")?;
    if !total_logdet.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite log-determinant {total_logdet} in loss"
        )));
    }
    let half_ssq: f64 = z.iter().map(|&v| 0.5 * v * v).sum();
    let loss = half_ssq - total_logdet + 0.5 * z.len() as f64 * ln_2pi();
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("unsupervised loss overflowed: {loss}")));
    }
    Ok(loss)
}

/// ||z - mu||^2 / (2 (1 - sigma^2)) - logdet + (d/2) ln(2 pi (1 - sigma^2)).
pub fn loss_cluster_supervised(
    z: &[f64],
    total_logdet: f64,
    mu: &[f64],
    sigma2: f64,
) -> Result<f64> {
    Error::check_finite(z, "loss input z")?;
    Error::check_finite(mu, "cluster centre mu")?;
    check_sigma2(sigma2)?;
    if z.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            context: "supervised loss".into(),
            expected: mu.len(),
            got: z.len(),
        });
    }
    if !total_logdet.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite log-determinant {total_logdet} in loss"
        )));
    }
    let var = 1.0 - sigma2;
    let ssq: f64 = z.iter().zip(mu).map(|(&a, &b)| (a - b) * (a - b)).sum();
    let d = z.len() as f64;
    let loss = ssq / (2.0 * var) - total_logdet + 0.5 * d * (ln_2pi() + var.ln());
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("supervised loss overflowed: {loss}")));
    }
    Ok(loss)
}
