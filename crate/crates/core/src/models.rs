//! Synthetic bandable covariance models, Gaussian sampling and the
//! bandable-class membership diagnostic.
//!
//! All randomness goes through [`ChaCha8Rng`]. A replicate is identified by
//! a base seed plus a stream number, so draws do not depend on which worker
//! produced them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, sym_eigenvalues, SYMMETRY_TOL};
use crate::matrix::Matrix;

/// Default off-diagonal scale of the first model.
pub const DEFAULT_RHO: f64 = 0.6;

const MAX_REDRAWS: usize = 1000;
const RIDGE: f64 = 1e-12;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceModel {
    /// Unit diagonal, `ρ |i-j|⁻² u_ij` off the diagonal with `u_ij ~ U(0,1)`.
    Model1 {
        #[serde(default = "default_rho")]
        rho: f64,
    },
    /// `max(0, -1.1 λ_min(A)) I + A` with `a_ij ~ N(0, |i-j|⁻⁴)`.
    Model2,
    Identity,
    Explicit { rows: Vec<Vec<f64>> },
}

fn default_rho() -> f64 {
    DEFAULT_RHO
}

impl CovarianceModel {
    pub fn name(&self) -> &'static str {
        match self {
            CovarianceModel::Model1 { .. } => "model1",
            CovarianceModel::Model2 => "model2",
            CovarianceModel::Identity => "identity",
            CovarianceModel::Explicit { .. } => "explicit",
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> Result<Matrix> {
        match self {
            CovarianceModel::Model1 { rho } => Ok(model1_with(p, *rho, rng)?.0),
            CovarianceModel::Model2 => model2_with(p, rng),
            CovarianceModel::Identity => Ok(Matrix::identity(p)),
            CovarianceModel::Explicit { rows } => {
                let m = Matrix::from_rows(rows)?;
                if m.shape() != (p, p) {
                    return Err(Error::dim(format!(
                        "explicit covariance is {}x{}, experiment asks for p = {p}",
                        m.rows(),
                        m.cols()
                    )));
                }
                if !m.is_symmetric(SYMMETRY_TOL) {
                    return Err(Error::param("explicit covariance is not symmetric"));
                }
                Ok(m)
            }
        }
    }
}

/// First simulation model, redrawn until positive definite.
pub fn generate_model1(p: usize, rho: f64, seed: u64) -> Result<Matrix> {
    let (m, redraws) = model1_with(p, rho, &mut seeded_rng(seed))?;
    if redraws > 0 {
        log::warn!("model1 (p={p}, seed={seed}): {redraws} indefinite draws rejected");
    }
    Ok(m)
}

/// Returns the draw and the number of rejected indefinite draws.
pub fn model1_with<R: Rng + ?Sized>(p: usize, rho: f64, rng: &mut R) -> Result<(Matrix, usize)> {
    if p == 0 {
        return Err(Error::param("dimension must be positive"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::param(format!("rho must lie in (0, 1), got {rho}")));
    }
    for redraws in 0..MAX_REDRAWS {
        let mut s = Matrix::identity(p);
        for i in 0..p {
            for j in (i + 1)..p {
                let lag = (j - i) as f64;
                let u: f64 = rng.random();
                let v = rho * u / (lag * lag);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        if p == 1 || sym_eigenvalues(&s)?[p - 1] > 0.0 {
            return Ok((s, redraws));
        }
    }
    Err(Error::Definiteness(format!(
        "model1 produced {MAX_REDRAWS} indefinite draws in a row (p={p}, rho={rho})"
    )))
}

pub fn generate_model2(p: usize, seed: u64) -> Result<Matrix> {
    model2_with(p, &mut seeded_rng(seed))
}

pub fn model2_with<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<Matrix> {
    if p == 0 {
        return Err(Error::param("dimension must be positive"));
    }
    let mut a = Matrix::zeros(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            let lag = (j - i) as f64;
            let z: f64 = rng.sample(StandardNormal);
            let v = z / (lag * lag);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    shift_to_pd(&a)
}

/// `max(0, -1.1 λ_min(A)) I + A`.
pub fn shift_to_pd(a: &Matrix) -> Result<Matrix> {
    let lmin = *sym_eigenvalues(a)?.last().expect("nonempty");
    let shift = (-1.1 * lmin).max(0.0);
    if shift == 0.0 {
        return Ok(a.clone());
    }
    let mut s = a.clone();
    for i in 0..s.rows() {
        s[(i, i)] += shift;
    }
    Ok(s)
}

/// `n` i.i.d. rows from `N(0, Σ)` as `L z` with `L` the Cholesky factor.
pub fn sample_gaussian(sigma: &Matrix, n: usize, seed: u64) -> Result<Matrix> {
    sample_gaussian_with(sigma, n, &mut seeded_rng(seed))
}

pub fn sample_gaussian_with<R: Rng + ?Sized>(sigma: &Matrix, n: usize, rng: &mut R) -> Result<Matrix> {
    let l = gaussian_factor(sigma)?;
    let p = sigma.rows();
    let mut data = Matrix::zeros(n, p);
    let mut z = vec![0.0; p];
    for r in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..p {
            let mut s = 0.0;
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                s += l[(i, k)] * zk;
            }
            data[(r, i)] = s;
        }
    }
    Ok(data)
}

/// Cholesky factor, retrying once with a `1e-12` relative ridge for
/// singular PSD input.
fn gaussian_factor(sigma: &Matrix) -> Result<Matrix> {
    match cholesky_lower(sigma) {
        Ok(l) => Ok(l),
        Err(Error::Definiteness(_)) => {
            let scale = sigma.diag().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            let mut ridged = sigma.clone();
            for i in 0..ridged.rows() {
                ridged[(i, i)] += RIDGE * scale;
            }
            cholesky_lower(&ridged).map_err(|_| {
                Error::Definiteness("covariance is not positive semi-definite".into())
            })
        }
        Err(e) => Err(e),
    }
}

/// `(α, M, M0)` of the bandable class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
}

impl ClassParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.m > 0.0 && self.m0 >= 1.0)
            || !(self.alpha.is_finite() && self.m.is_finite() && self.m0.is_finite())
        {
            return Err(Error::param(format!(
                "class parameters need alpha > 0, M > 0, M0 >= 1; got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub in_class: bool,
    /// Lag maximising `k^α · tail(k)`; 0 when every off-diagonal entry is zero.
    pub worst_k: usize,
    /// `max_k k^α · max_j Σ_{|i-j| ≥ k} |σ_ij|`, the smallest admissible `M`.
    pub tail_sup: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// `max_j Σ_{i: |i-j| ≥ k} |σ_ij|` for `k = 0..p` (index `k`).
pub fn tail_sums(sigma: &Matrix) -> Result<Vec<f64>> {
    sigma.require_square("tail sums")?;
    let p = sigma.rows();
    let mut best = vec![0.0_f64; p + 1];
    let mut by_lag = vec![0.0; p];
    for j in 0..p {
        by_lag.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..p {
            by_lag[i.abs_diff(j)] += sigma[(i, j)].abs();
        }
        let mut acc = 0.0;
        for k in (0..p).rev() {
            acc += by_lag[k];
            best[k] = best[k].max(acc);
        }
    }
    Ok(best)
}

pub fn check_class_membership(sigma: &Matrix, params: &ClassParams) -> Result<ClassReport> {
    params.validate()?;
    sigma.require_nonempty("class membership")?;
    let tails = tail_sums(sigma)?;
    let p = sigma.rows();
    let mut worst_k = 0;
    let mut tail_sup = 0.0;
    for (k, &t) in tails.iter().enumerate().take(p).skip(1) {
        let v = (k as f64).powf(params.alpha) * t;
        if v > tail_sup {
            tail_sup = v;
            worst_k = k;
        }
    }
    let eig = sym_eigenvalues(sigma)?;
    let lambda_max = eig[0];
    let lambda_min = eig[p - 1];
    let in_class = tail_sup <= params.m && lambda_min >= 1.0 / params.m0 && lambda_max <= params.m0;
    Ok(ClassReport {
        in_class,
        worst_k,
        tail_sup,
        lambda_min,
        lambda_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::sample_covariance;

    #[test]
    fn model1_structure() {
        let s = generate_model1(30, 0.6, 9).unwrap();
        assert!(s.is_exactly_symmetric());
        for i in 0..30 {
            assert_eq!(s[(i, i)], 1.0);
            for j in 0..30 {
                if i != j {
                    let bound = 0.6 / ((i.abs_diff(j) as f64).powi(2));
                    assert!(s[(i, j)].abs() <= bound && s[(i, j)] >= 0.0);
                }
            }
        }
        assert_eq!(generate_model1(1, 0.6, 1).unwrap(), Matrix::identity(1));
        assert_eq!(generate_model1(30, 0.6, 9).unwrap(), s);
        assert!(generate_model1(5, 1.0, 1).is_err());
    }

    #[test]
    fn model2_shift_formula() {
        // λ_min(A) = -2 for A = [[0,2],[2,0]]
        let a = Matrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]]).unwrap();
        let s = shift_to_pd(&a).unwrap();
        let expected = Matrix::from_rows(&[[2.2, 2.0], [2.0, 2.2]]).unwrap();
        for (x, y) in s.data().iter().zip(expected.data()) {
            assert!((x - y).abs() < 1e-12);
        }
        let psd = Matrix::from_diag(&[0.0, 1.0]);
        assert_eq!(shift_to_pd(&psd).unwrap(), psd);
    }

    #[test]
    fn model2_is_positive_definite() {
        for seed in 0..10 {
            let s = generate_model2(40, seed).unwrap();
            assert!(s.is_exactly_symmetric());
            let vals = sym_eigenvalues(&s).unwrap();
            assert!(vals[39] > 0.0);
        }
    }

    #[test]
    fn gaussian_sampling_moments() {
        let data = sample_gaussian(&Matrix::from_diag(&[4.0, 1.0]), 100_000, 3).unwrap();
        let s = sample_covariance(&data).unwrap();
        assert!((s[(0, 0)] / 4.0 - 1.0).abs() < 0.05);
        assert!((s[(1, 1)] - 1.0).abs() < 0.05);
        let corr = s[(0, 1)] / (s[(0, 0)] * s[(1, 1)]).sqrt();
        assert!(corr.abs() < 0.02);
        assert!((s[(0, 0)] / s[(1, 1)] - 4.0).abs() < 0.2);
    }

    #[test]
    fn gaussian_sampling_edges() {
        let empty = sample_gaussian(&Matrix::identity(3), 0, 1).unwrap();
        assert_eq!(empty.shape(), (0, 3));
        // singular PSD is accepted through the ridge
        let singular = Matrix::filled(2, 2, 1.0);
        let d = sample_gaussian(&singular, 5, 1).unwrap();
        for r in 0..5 {
            assert!((d[(r, 0)] - d[(r, 1)]).abs() < 1e-5);
        }
        let indefinite = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(sample_gaussian(&indefinite, 5, 1), Err(Error::Definiteness(_))));
        assert_eq!(
            sample_gaussian(&Matrix::identity(4), 10, 77).unwrap(),
            sample_gaussian(&Matrix::identity(4), 10, 77).unwrap()
        );
    }

    #[test]
    fn streams_differ() {
        let a: u64 = stream_rng(1, 0).random();
        let b: u64 = stream_rng(1, 1).random();
        assert_ne!(a, b);
        let c: u64 = stream_rng(1, 1).random();
        assert_eq!(b, c);
    }

    #[test]
    fn identity_is_in_class() {
        let params = ClassParams { alpha: 0.7, m: 1e-6, m0: 1.0 };
        let r = check_class_membership(&Matrix::identity(10), &params).unwrap();
        assert!(r.in_class);
        assert_eq!(r.tail_sup, 0.0);
        assert_eq!(r.worst_k, 0);
    }

    #[test]
    fn constant_band_violates_at_lag_one() {
        let c = 0.4;
        let s = Matrix::from_fn(8, 8, |i, j| match i.abs_diff(j) {
            0 => 1.0,
            1 => c,
            _ => 0.0,
        });
        let params = ClassParams { alpha: 1.0, m: 0.5, m0: 10.0 };
        let r = check_class_membership(&s, &params).unwrap();
        assert!(!r.in_class);
        assert_eq!(r.worst_k, 1);
        assert!((r.tail_sup - 2.0 * c).abs() < 1e-15);
    }

    #[test]
    fn class_params_validated() {
        let bad = ClassParams { alpha: 1.0, m: 1.0, m0: 0.5 };
        assert!(check_class_membership(&Matrix::identity(2), &bad).is_err());
    }
}
