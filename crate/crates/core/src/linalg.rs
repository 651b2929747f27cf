//! Norms, the symmetric eigensolver, Cholesky and the Schur product.
//!
//! The eigensolver is Householder tridiagonalisation followed by the
//! implicit QL iteration (the EISPACK `tred2`/`tql2` pair). It is fully
//! deterministic: the same input bits give the same output bits.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Inputs whose asymmetry exceeds this (relative to `max(1, max|a|)`) are rejected.
pub const SYMMETRY_TOL: f64 = 1e-10;

const QL_MAX_ITER: usize = 64;

/// Eigen-decomposition of a symmetric matrix, values sorted descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Matrix,
}

impl SymEigen {
    /// `V diag(f(λ)) Vᵀ`, exactly symmetric.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let v = &self.vectors;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += v[(i, k)] * mapped[k] * v[(j, k)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix {
        self.reconstruct_with(|v| v)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }
}

/// Largest singular value. Works for rectangular blocks.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    a.require_nonempty("spectral norm")?;
    if a.max_abs() == 0.0 {
        return Ok(0.0);
    }
    if a.rows() == 1 || a.cols() == 1 {
        return Ok(euclid(a.data()));
    }
    if a.is_exactly_symmetric() {
        let vals = sym_eigenvalues(a)?;
        return Ok(vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    let g = if a.rows() >= a.cols() {
        a.gram()
    } else {
        a.transpose().gram()
    };
    let top = sym_eigenvalues(&g)?[0];
    Ok(top.max(0.0).sqrt())
}

pub fn frobenius_norm(a: &Matrix) -> Result<f64> {
    a.require_nonempty("Frobenius norm")?;
    Ok(euclid(a.data()))
}

/// Maximum absolute column sum.
pub fn l1_operator_norm(a: &Matrix) -> Result<f64> {
    a.require_nonempty("l1 norm")?;
    let mut sums = vec![0.0; a.cols()];
    for i in 0..a.rows() {
        for (s, v) in sums.iter_mut().zip(a.row(i)) {
            *s += v.abs();
        }
    }
    Ok(sums.into_iter().fold(0.0, f64::max))
}

/// Maximum absolute row sum.
pub fn l_inf_operator_norm(a: &Matrix) -> Result<f64> {
    a.require_nonempty("l-infinity norm")?;
    Ok((0..a.rows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

pub fn schur_product(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.zip_with(b, "take the Schur product of", |x, y| x * y)
}

fn euclid(v: &[f64]) -> f64 {
    // scaled to avoid overflow on huge entries
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale) * (x / scale)).sum::<f64>().sqrt()
}

fn prepare_symmetric(a: &Matrix) -> Result<Matrix> {
    a.require_nonempty("eigen-decomposition")?;
    a.require_square("eigen-decomposition")?;
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::param(
            "eigen-decomposition needs a symmetric matrix (asymmetry above 1e-10)",
        ));
    }
    if a.is_exactly_symmetric() {
        Ok(a.clone())
    } else {
        a.symmetrized()
    }
}

/// Full eigen-decomposition. Slightly asymmetric input is averaged with its transpose.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    let a = prepare_symmetric(a)?;
    let n = a.rows();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e, true);
    tql2(&mut v, &mut d, &mut e, true)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = Matrix::from_fn(n, n, |i, c| v[i][order[c]]);
    Ok(SymEigen { values, vectors })
}

/// Eigenvalues only, sorted descending.
pub fn sym_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    let a = prepare_symmetric(a)?;
    let n = a.rows();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e, false);
    tql2(&mut v, &mut d, &mut e, false)?;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// Householder reduction to tridiagonal form. On return `d` holds the
/// diagonal, `e[1..]` the sub-diagonal and, if `accumulate`, `v` the
/// orthogonal transform.
fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let n = d.len();
    d[..n].copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    if accumulate {
        for i in 0..n.saturating_sub(1) {
            v[n - 1][i] = v[i][i];
            v[i][i] = 1.0;
            let h = d[i + 1];
            if h != 0.0 {
                for k in 0..=i {
                    d[k] = v[k][i + 1] / h;
                }
                for j in 0..=i {
                    let mut g = 0.0;
                    for k in 0..=i {
                        g += v[k][i + 1] * v[k][j];
                    }
                    for k in 0..=i {
                        v[k][j] -= g * d[k];
                    }
                }
            }
            for row in v.iter_mut().take(i + 1) {
                row[i + 1] = 0.0;
            }
        }
        for j in 0..n {
            d[j] = v[n - 1][j];
            v[n - 1][j] = 0.0;
        }
        v[n - 1][n - 1] = 1.0;
    } else {
        // the tridiagonal's diagonal is left on the workspace diagonal
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = v[j][j];
        }
    }
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`, rotating `v` if `vectors`.
fn tql2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64], vectors: bool) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(Error::Convergence(format!(
                        "QL iteration did not converge for eigenvalue {l} of {n}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if vectors {
                        for row in v.iter_mut() {
                            let h = row[i + 1];
                            row[i + 1] = s * row[i] + c * h;
                            row[i] = c * row[i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Lower-triangular `L` with `L Lᵀ = a`.
pub fn cholesky_lower(a: &Matrix) -> Result<Matrix> {
    a.require_nonempty("Cholesky factorisation")?;
    a.require_square("Cholesky factorisation")?;
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::param("Cholesky factorisation needs a symmetric matrix"));
    }
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut s = a[(j, j)];
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::Definiteness(format!(
                "non-positive pivot {s:e} at column {j}"
            )));
        }
        let diag = s.sqrt();
        l[(j, j)] = diag;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / diag;
        }
    }
    Ok(l)
}
