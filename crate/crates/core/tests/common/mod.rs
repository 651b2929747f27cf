//! Test-side oracles, written independently of the library's numerics.
#![allow(dead_code)]

use blockcov::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn to_rows(a: &Matrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, sorted descending.
pub fn jacobi_eigenvalues(a: &Matrix) -> Vec<f64> {
    jacobi(a).0
}

/// Cyclic Jacobi: (eigenvalues descending, eigenvectors as columns).
pub fn jacobi(a: &Matrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = to_rows(a);
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    let scale: f64 = m.iter().flatten().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| m[y][y].total_cmp(&m[x][x]));
    let values = idx.iter().map(|&i| m[i][i]).collect();
    let vectors = (0..n).map(|r| idx.iter().map(|&c| v[r][c]).collect()).collect();
    (values, vectors)
}

pub fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut s = 0.0;
            for k in 0..a.cols() {
                s += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

pub fn naive_transpose(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.cols(), a.rows(), |i, j| a[(j, i)])
}

/// Largest singular value via Jacobi on the Gram matrix.
pub fn oracle_spectral_norm(a: &Matrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let g = if a.rows() >= a.cols() {
        naive_matmul(&naive_transpose(a), a)
    } else {
        naive_matmul(a, &naive_transpose(a))
    };
    let g = Matrix::from_fn(g.rows(), g.cols(), |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
    jacobi_eigenvalues(&g)[0].max(0.0).sqrt()
}

/// Spectral norm of a symmetric matrix as its largest |eigenvalue|.
pub fn oracle_sym_norm(a: &Matrix) -> f64 {
    jacobi_eigenvalues(a).iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn naive_frobenius(a: &Matrix) -> f64 {
    a.data().iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn naive_l1(a: &Matrix) -> f64 {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Two-pass sample covariance with divisor n - 1.
pub fn naive_sample_covariance(x: &Matrix) -> Matrix {
    let (n, p) = (x.rows(), x.cols());
    let mean: Vec<f64> = (0..p).map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64).collect();
    Matrix::from_fn(p, p, |a, b| {
        (0..n).map(|i| (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b])).sum::<f64>() / (n - 1) as f64
    })
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-2.0..2.0))
}

pub fn random_symmetric(p: usize, rng: &mut impl Rng) -> Matrix {
    let a = random_matrix(p, p, rng);
    Matrix::from_fn(p, p, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] })
}

/// `Q diag(eigs) Qᵀ` for a random orthogonal `Q` from Jacobi of a random symmetric matrix.
pub fn with_spectrum(eigs: &[f64], rng: &mut impl Rng) -> Matrix {
    let p = eigs.len();
    let (_, q) = jacobi(&random_symmetric(p, rng));
    let m = Matrix::from_fn(p, p, |i, j| (0..p).map(|k| q[i][k] * eigs[k] * q[j][k]).sum());
    Matrix::from_fn(p, p, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] })
}

/// Multiset equality of two real sequences to an absolute tolerance.
pub fn same_multiset(a: &[f64], b: &[f64], tol: f64) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
