//! Sample covariance, the block thresholding estimator, its positive
//! semi-definite projection and the truncated-inverse precision estimator.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::blocking::{Block, BlockPartition};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, spectral_norm, sym_eigen, SYMMETRY_TOL};
use crate::matrix::{Matrix, Span};

pub const DEFAULT_LAMBDA0: f64 = 6.0;

/// Smallest thresholding constant covered by the concentration bound.
pub const SAFE_LAMBDA0: f64 = 5.44;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    #[default]
    Hard,
    Soft,
    AdaptiveLasso,
}

/// Norm used as the block statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockNorm {
    #[default]
    Spectral,
    Frobenius,
}

/// Univariate thresholding rule `t_λ` applied to block norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdRule {
    pub kind: RuleKind,
    /// Exponent of the adaptive lasso rule; ignored otherwise.
    pub eta: f64,
    pub norm: BlockNorm,
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule {
            kind: RuleKind::Hard,
            eta: 1.0,
            norm: BlockNorm::Spectral,
        }
    }
}

impl ThresholdRule {
    pub fn hard() -> Self {
        Self::default()
    }

    pub fn soft() -> Self {
        ThresholdRule {
            kind: RuleKind::Soft,
            ..Self::default()
        }
    }

    pub fn adaptive_lasso(eta: f64) -> Result<Self> {
        let rule = ThresholdRule {
            kind: RuleKind::AdaptiveLasso,
            eta,
            ..Self::default()
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn with_norm(self, norm: BlockNorm) -> Self {
        ThresholdRule { norm, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == RuleKind::AdaptiveLasso && !(self.eta >= 1.0 && self.eta.is_finite()) {
            return Err(Error::param(format!(
                "adaptive lasso exponent must be >= 1, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    /// `t_λ(z)`.
    pub fn apply(&self, z: f64, lambda: f64) -> f64 {
        match self.kind {
            RuleKind::Hard => {
                if z.abs() > lambda {
                    z
                } else {
                    0.0
                }
            }
            RuleKind::Soft => (z.abs() - lambda).max(0.0) * z.signum(),
            RuleKind::AdaptiveLasso => {
                if z == 0.0 {
                    0.0
                } else {
                    z * (1.0 - (lambda / z).abs().powf(self.eta)).max(0.0)
                }
            }
        }
    }

    fn block_norm(&self, block: &Matrix) -> Result<f64> {
        match self.norm {
            BlockNorm::Spectral => spectral_norm(block),
            BlockNorm::Frobenius => frobenius_norm(block),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub lambda0: f64,
    /// Base block size; `None` means `max(1, ⌊ln p⌋)`.
    pub k0: Option<usize>,
    pub rule: ThresholdRule,
    /// Eigenvalue floor for the PSD projection.
    pub epsilon_n: f64,
    /// Cap on eigenvalue reciprocals in the precision estimate; `None` means `n`.
    pub inverse_cap: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            lambda0: DEFAULT_LAMBDA0,
            k0: None,
            rule: ThresholdRule::default(),
            epsilon_n: 0.0,
            inverse_cap: None,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(Error::param(format!("lambda0 must be finite and >= 0, got {}", self.lambda0)));
        }
        if self.k0 == Some(0) {
            return Err(Error::param("k0 must be positive"));
        }
        if !(self.epsilon_n >= 0.0 && self.epsilon_n.is_finite()) {
            return Err(Error::param(format!("epsilon_n must be >= 0, got {}", self.epsilon_n)));
        }
        if let Some(cap) = self.inverse_cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(Error::param(format!("inverse cap must be positive, got {cap}")));
            }
        }
        self.rule.validate()
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.lambda0 < SAFE_LAMBDA0 {
            w.push(format!(
                "lambda0 = {} is below {SAFE_LAMBDA0}, where the adaptivity guarantee is not established",
                self.lambda0
            ));
        }
        w
    }

    pub fn partition(&self, p: usize) -> Result<BlockPartition> {
        match self.k0 {
            Some(k0) => BlockPartition::build(p, k0.min(p)),
            None => BlockPartition::with_default_k0(p),
        }
    }
}

/// `(n-1)⁻¹ Σ (x_i - x̄)(x_i - x̄)ᵀ` for an `n × p` data matrix; exactly symmetric.
pub fn sample_covariance(data: &Matrix) -> Result<Matrix> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if p == 0 {
        return Err(Error::dim("data has no variables"));
    }
    let mut means = vec![0.0; p];
    for i in 0..n {
        for (m, v) in means.iter_mut().zip(data.row(i)) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let centered = Matrix::from_fn(n, p, |i, j| data[(i, j)] - means[j]);
    Ok(centered.gram().scaled(1.0 / (n as f64 - 1.0)))
}

/// What happened to one upper-triangle block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockDecision {
    /// Diagonal block, copied verbatim.
    Kept,
    /// `d(B) > n / ln n`, set to zero.
    Killed,
    /// Scaled by `factor = t_λ(norm) / norm` (1 or 0 for the hard rule).
    Thresholded { norm: f64, lambda: f64, factor: f64 },
}

/// `λ_B = λ0 √(‖Σ̄_II‖ ‖Σ̄_JJ‖) √((d(B) + ln p) / n)`.
pub fn block_lambda(lambda0: f64, diag_norm_i: f64, diag_norm_j: f64, dim: usize, p: usize, n: usize) -> f64 {
    lambda0 * (diag_norm_i * diag_norm_j).sqrt() * ((dim as f64 + (p as f64).ln()) / n as f64).sqrt()
}

/// `n / ln n`; blocks with `d(B)` strictly above it are zeroed.
pub fn kill_threshold(n: usize) -> f64 {
    n as f64 / (n as f64).ln()
}

/// Decisions for every upper-triangle block, in partition order.
pub fn block_decisions(
    sigma_bar: &Matrix,
    part: &BlockPartition,
    cfg: &EstimatorConfig,
    n: usize,
) -> Result<Vec<(Block, BlockDecision)>> {
    cfg.validate()?;
    let p = part.p();
    if sigma_bar.shape() != (p, p) {
        return Err(Error::dim(format!(
            "{}x{} matrix against a partition of dimension {p}",
            sigma_bar.rows(),
            sigma_bar.cols()
        )));
    }
    if !sigma_bar.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::param("sample covariance must be symmetric"));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }

    let kill = kill_threshold(n);
    let mut diag_norms: HashMap<Span, f64> = HashMap::new();
    let mut diag_norm = |s: Span| -> Result<f64> {
        if let Some(&v) = diag_norms.get(&s) {
            return Ok(v);
        }
        let v = spectral_norm(&sigma_bar.submatrix_unchecked(s, s))?;
        diag_norms.insert(s, v);
        Ok(v)
    };

    let mut out = Vec::new();
    for b in part.upper_blocks() {
        let decision = if b.diagonal {
            BlockDecision::Kept
        } else if b.dim() as f64 > kill {
            BlockDecision::Killed
        } else {
            let sub = sigma_bar.submatrix_unchecked(b.rows, b.cols);
            let norm = cfg.rule.block_norm(&sub)?;
            let lambda = block_lambda(cfg.lambda0, diag_norm(b.rows)?, diag_norm(b.cols)?, b.dim(), p, n);
            let factor = if norm > 0.0 {
                cfg.rule.apply(norm, lambda) / norm
            } else {
                0.0
            };
            BlockDecision::Thresholded { norm, lambda, factor }
        };
        out.push((*b, decision));
    }
    Ok(out)
}

/// The block thresholding estimator `Σ̂`.
///
/// Diagonal blocks are copied, blocks with `d(B) > n / ln n` are zeroed and
/// every other block is shrunk according to its norm against `λ_B`. Only
/// upper-triangle blocks are decided; the lower triangle is the mirror, so
/// the output is bitwise symmetric whenever `sigma_bar` is.
pub fn block_threshold(
    sigma_bar: &Matrix,
    part: &BlockPartition,
    cfg: &EstimatorConfig,
    n: usize,
) -> Result<Matrix> {
    let decisions = block_decisions(sigma_bar, part, cfg, n)?;
    let p = part.p();
    let mut out = Matrix::zeros(p, p);
    for (b, d) in decisions {
        match d {
            BlockDecision::Kept => {
                for i in b.rows.iter() {
                    for j in b.cols.iter() {
                        out[(i, j)] = sigma_bar[(i, j)];
                    }
                }
            }
            BlockDecision::Killed => {}
            BlockDecision::Thresholded { factor, .. } => {
                if factor == 0.0 {
                    continue;
                }
                for i in b.rows.iter() {
                    for j in b.cols.iter() {
                        let v = if factor == 1.0 {
                            sigma_bar[(i, j)]
                        } else {
                            sigma_bar[(i, j)] * factor
                        };
                        out[(i, j)] = v;
                        out[(j, i)] = v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `Σ λᵢ⁺ vᵢvᵢᵀ` with `λᵢ⁺ = max(λᵢ, ε)`. Returns the input unchanged when
/// it already satisfies `λ_min ≥ ε`.
pub fn psd_project(sigma_hat: &Matrix, epsilon: f64) -> Result<Matrix> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::param(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let eig = sym_eigen(sigma_hat)?;
    if eig.min() >= epsilon {
        return Ok(sigma_hat.clone());
    }
    Ok(eig.reconstruct_with(|v| v.max(epsilon)))
}

/// `Û diag(min(1/d̂ᵢ, n)) Ûᵀ`; non-positive `d̂ᵢ` map to the cap `n`.
pub fn precision_estimate(sigma_hat: &Matrix, n: usize) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::param("sample size must be positive"));
    }
    precision_estimate_capped(sigma_hat, n as f64)
}

pub fn precision_estimate_capped(sigma_hat: &Matrix, cap: f64) -> Result<Matrix> {
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(Error::param(format!("inverse cap must be positive, got {cap}")));
    }
    let eig = sym_eigen(sigma_hat)?;
    Ok(eig.reconstruct_with(|d| inverse_eigenvalue(d, cap)))
}

pub(crate) fn inverse_eigenvalue(d: f64, cap: f64) -> f64 {
    if d <= 0.0 {
        cap
    } else {
        (1.0 / d).min(cap)
    }
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub sigma_bar: Matrix,
    pub sigma_hat: Matrix,
    pub sigma_hat_psd: Matrix,
    pub omega_hat: Matrix,
    pub partition: BlockPartition,
}

/// Full pipeline on an `n × p` observation matrix.
pub fn estimate(data: &Matrix, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    for w in cfg.warnings() {
        log::warn!("{w}");
    }
    let n = data.rows();
    let sigma_bar = sample_covariance(data)?;
    let partition = cfg.partition(data.cols())?;
    let sigma_hat = block_threshold(&sigma_bar, &partition, cfg, n)?;
    let sigma_hat_psd = psd_project(&sigma_hat, cfg.epsilon_n)?;
    let cap = cfg.inverse_cap.unwrap_or(n as f64);
    let omega_hat = precision_estimate_capped(&sigma_hat, cap)?;
    Ok(Estimate {
        sigma_bar,
        sigma_hat,
        sigma_hat_psd,
        omega_hat,
        partition,
    })
}
