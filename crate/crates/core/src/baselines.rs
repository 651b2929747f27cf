//! Banding and tapering estimators with their rate-based bandwidths, and
//! the loss metrics used to compare estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, l1_operator_norm, schur_product, spectral_norm};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BandwidthSpec {
    Explicit { k: usize },
    /// `⌊(n / ln p)^{1/(2(α+1))}⌋`
    BandingRate { alpha: f64 },
    /// `⌊n^{1/(2α+1)}⌋`
    TaperingRate { alpha: f64 },
}

impl BandwidthSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BandwidthSpec::Explicit { k: 0 } => Err(Error::param("bandwidth must be >= 1")),
            BandwidthSpec::BandingRate { alpha } | BandwidthSpec::TaperingRate { alpha }
                if !(alpha > 0.0 && alpha.is_finite()) =>
            {
                Err(Error::param(format!("alpha must be positive, got {alpha}")))
            }
            _ => Ok(()),
        }
    }
}

pub fn select_bandwidth(spec: BandwidthSpec, n: usize, p: usize) -> Result<usize> {
    spec.validate()?;
    let raw = match spec {
        BandwidthSpec::Explicit { k } => return Ok(k),
        BandwidthSpec::BandingRate { alpha } => {
            if p < 2 {
                return Err(Error::param("banding rate needs p >= 2"));
            }
            (n as f64 / (p as f64).ln()).powf(1.0 / (2.0 * (alpha + 1.0)))
        }
        BandwidthSpec::TaperingRate { alpha } => (n as f64).powf(1.0 / (2.0 * alpha + 1.0)),
    };
    Ok((raw.floor() as usize).max(1))
}

/// `B_k = (𝕀(|i-j| ≤ k))`.
pub fn banding_weights(p: usize, k: usize) -> Matrix {
    Matrix::from_fn(p, p, |i, j| if i.abs_diff(j) <= k { 1.0 } else { 0.0 })
}

/// Tapering weight at lag `m` for an even bandwidth `k`:
/// `(2/k)((k-m)₊ - (k/2-m)₊)`.
pub fn taper_weight(k: usize, lag: usize) -> f64 {
    let k = k as f64;
    let m = lag as f64;
    (2.0 / k) * ((k - m).max(0.0) - (k / 2.0 - m).max(0.0))
}

/// Even bandwidth actually used for tapering; odd values round down.
pub fn even_taper_bandwidth(k: usize) -> Result<usize> {
    if k < 2 {
        return Err(Error::param(format!("tapering bandwidth must be >= 2, got {k}")));
    }
    if k % 2 == 1 {
        log::warn!("odd tapering bandwidth {k} rounded down to {}", k - 1);
        return Ok(k - 1);
    }
    Ok(k)
}

/// `T_k`: 1 for `|i-j| ≤ k/2`, linear down to 0 at `|i-j| = k`.
pub fn tapering_weights(p: usize, k: usize) -> Result<Matrix> {
    let k = even_taper_bandwidth(k)?;
    Ok(Matrix::from_fn(p, p, |i, j| taper_weight(k, i.abs_diff(j))))
}

pub fn band_or_taper(sigma_bar: &Matrix, weights: &Matrix) -> Result<Matrix> {
    schur_product(sigma_bar, weights)
}

pub fn banding_estimate(sigma_bar: &Matrix, k: usize) -> Result<Matrix> {
    sigma_bar.require_square("banding")?;
    band_or_taper(sigma_bar, &banding_weights(sigma_bar.rows(), k))
}

pub fn tapering_estimate(sigma_bar: &Matrix, k: usize) -> Result<Matrix> {
    sigma_bar.require_square("tapering")?;
    band_or_taper(sigma_bar, &tapering_weights(sigma_bar.rows(), k)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMetric {
    Spectral,
    Frobenius,
    L1,
}

impl LossMetric {
    pub fn name(&self) -> &'static str {
        match self {
            LossMetric::Spectral => "spectral",
            LossMetric::Frobenius => "frobenius",
            LossMetric::L1 => "l1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(LossMetric::Spectral),
            "frobenius" => Ok(LossMetric::Frobenius),
            "l1" => Ok(LossMetric::L1),
            other => Err(Error::param(format!("unknown metric {other:?}"))),
        }
    }
}

pub fn loss(estimate: &Matrix, truth: &Matrix, metric: LossMetric) -> Result<f64> {
    let diff = estimate.sub(truth)?;
    match metric {
        LossMetric::Spectral => spectral_norm(&diff),
        LossMetric::Frobenius => frobenius_norm(&diff),
        LossMetric::L1 => l1_operator_norm(&diff),
    }
}
