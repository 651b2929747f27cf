//! C ABI over `blockcov`.
//!
//! Every fallible function returns a [`BcStatus`] and writes results through
//! out-pointers. On failure `bc_last_error` returns a message for the
//! calling thread. Matrices and partitions are opaque heap handles that the
//! caller releases with the matching `*_free` function. Matrices are
//! row-major; block ranges are 0-based and half-open.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use blockcov::baselines::{banding_estimate, loss, tapering_estimate, LossMetric};
use blockcov::csvio::{read_matrix_file, write_matrix_file};
use blockcov::estimators::{
    block_threshold, precision_estimate_capped, psd_project, sample_covariance, BlockNorm,
    EstimatorConfig, ThresholdRule, DEFAULT_LAMBDA0,
};
use blockcov::models::{generate_model1, generate_model2, sample_gaussian};
use blockcov::{spectral_norm, BlockPartition, Error, Matrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    Parameter = 3,
    Definiteness = 4,
    InsufficientData = 5,
    Convergence = 6,
    Parse = 7,
    Io = 8,
    OutOfRange = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcRule {
    Hard = 0,
    Soft = 1,
    AdaptiveLasso = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcBlockNorm {
    Spectral = 0,
    Frobenius = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcLoss {
    Spectral = 0,
    Frobenius = 1,
    L1 = 2,
}

/// Opaque dense matrix.
pub struct BcMatrix(Matrix);

/// Opaque block partition.
pub struct BcPartition(BlockPartition);

/// One block of a partition; ranges are 0-based and half-open.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BcBlock {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
    pub level: u32,
    pub diagonal: bool,
}

/// Estimator settings. Fill with `bc_estimator_config_default` first.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcEstimatorConfig {
    pub lambda0: f64,
    /// 0 selects `max(1, floor(ln p))`.
    pub k0: usize,
    pub rule: BcRule,
    /// Adaptive lasso exponent, ignored by the other rules.
    pub eta: f64,
    pub block_norm: BcBlockNorm,
    /// Eigenvalue floor for the PSD projection.
    pub epsilon: f64,
    /// Cap on inverted eigenvalues; values <= 0 select the sample size.
    pub inverse_cap: f64,
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Range(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn core_status(e: &Error) -> BcStatus {
    match e {
        Error::Dimension(_) => BcStatus::Dimension,
        Error::Parameter(_) => BcStatus::Parameter,
        Error::Definiteness(_) => BcStatus::Definiteness,
        Error::InsufficientData { .. } => BcStatus::InsufficientData,
        Error::Convergence(_) => BcStatus::Convergence,
        Error::Csv { .. } | Error::Json(_) => BcStatus::Parse,
        Error::Io(_) => BcStatus::Io,
        Error::Replicate { source, .. } => core_status(source),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BcStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return BcStatus::Ok,
        Ok(Err(Failure::Core(e))) => (core_status(&e), e.to_string()),
        Ok(Err(Failure::Null(what))) => (BcStatus::NullPointer, format!("null pointer: {what}")),
        Ok(Err(Failure::Range(msg))) => (BcStatus::OutOfRange, msg),
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (BcStatus::Panic, format!("internal panic: {msg}"))
        }
    };
    set_last_error(msg);
    status
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_matrix(out: *mut *mut BcMatrix, m: Matrix) -> Result<(), Failure> {
    write_out(out, Box::into_raw(Box::new(BcMatrix(m))), "out")
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, Failure> {
    if path.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure::Core(Error::Parameter("path is not valid UTF-8".into())))?;
    Ok(Path::new(s))
}

fn to_config(c: &BcEstimatorConfig) -> Result<EstimatorConfig, Failure> {
    let rule = match c.rule {
        BcRule::Hard => ThresholdRule::hard(),
        BcRule::Soft => ThresholdRule::soft(),
        BcRule::AdaptiveLasso => ThresholdRule::adaptive_lasso(c.eta)?,
    };
    let rule = rule.with_norm(match c.block_norm {
        BcBlockNorm::Spectral => BlockNorm::Spectral,
        BcBlockNorm::Frobenius => BlockNorm::Frobenius,
    });
    let cfg = EstimatorConfig {
        lambda0: c.lambda0,
        k0: (c.k0 > 0).then_some(c.k0),
        rule,
        epsilon_n: c.epsilon,
        inverse_cap: (c.inverse_cap > 0.0).then_some(c.inverse_cap),
    };
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// Errors

/// Message for the last failure on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn bc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn bc_status_name(status: BcStatus) -> *const c_char {
    let s: &'static CStr = match status {
        BcStatus::Ok => c"ok",
        BcStatus::NullPointer => c"null-pointer",
        BcStatus::Dimension => c"dimension",
        BcStatus::Parameter => c"parameter",
        BcStatus::Definiteness => c"definiteness",
        BcStatus::InsufficientData => c"insufficient-data",
        BcStatus::Convergence => c"convergence",
        BcStatus::Parse => c"parse",
        BcStatus::Io => c"io",
        BcStatus::OutOfRange => c"out-of-range",
        BcStatus::Panic => c"panic",
    };
    s.as_ptr()
}

// ---------------------------------------------------------------------------
// Matrices

/// Copies `rows * cols` row-major values into a new matrix.
#[no_mangle]
pub unsafe extern "C" fn bc_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut BcMatrix,
) -> BcStatus {
    guard(|| {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure::Range("rows * cols overflows".into()))?;
        let values = if len == 0 {
            Vec::new()
        } else {
            if data.is_null() {
                return Err(Failure::Null("data"));
            }
            std::slice::from_raw_parts(data, len).to_vec()
        };
        put_matrix(out, Matrix::new(rows, cols, values)?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn bc_matrix_identity(p: usize, out: *mut *mut BcMatrix) -> BcStatus {
    guard(|| put_matrix(out, Matrix::identity(p)))
}

#[no_mangle]
pub unsafe extern "C" fn bc_matrix_free(m: *mut BcMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Row count, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn bc_matrix_rows(m: *const BcMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// Column count, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn bc_matrix_cols(m: *const BcMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

#[no_mangle]
pub unsafe extern "C" fn bc_matrix_get(m: *const BcMatrix, i: usize, j: usize, out: *mut f64) -> BcStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        if i >= m.rows() || j >= m.cols() {
            return Err(Failure::Range(format!(
                "index ({i}, {j}) outside {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        write_out(out, m[(i, j)], "out")
    })
}

/// Copies the row-major entries into `buf`, which must hold `len >= rows * cols` values.
#[no_mangle]
pub unsafe extern "C" fn bc_matrix_copy_data(m: *const BcMatrix, buf: *mut f64, len: usize) -> BcStatus {
    guard(|| {
        let data = deref(m, "matrix")?.0.data();
        if len < data.len() {
            return Err(Failure::Range(format!("buffer holds {len} values, need {}", data.len())));
        }
        if data.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bc_matrix_read_csv(path: *const c_char, out: *mut *mut BcMatrix) -> BcStatus {
    guard(|| {
        let m = read_matrix_file(path_arg(path)?)?;
        put_matrix(out, m)
    })
}

#[no_mangle]
pub unsafe extern "C" fn bc_matrix_write_csv(m: *const BcMatrix, path: *const c_char) -> BcStatus {
    guard(|| Ok(write_matrix_file(path_arg(path)?, &deref(m, "matrix")?.0)?))
}

// ---------------------------------------------------------------------------
// Partitions

/// Builds the block partition of `0..p`; `k0 = 0` selects the default.
#[no_mangle]
pub unsafe extern "C" fn bc_partition_new(p: usize, k0: usize, out: *mut *mut BcPartition) -> BcStatus {
    guard(|| {
        let part = if k0 == 0 {
            BlockPartition::with_default_k0(p)?
        } else {
            BlockPartition::build(p, k0)?
        };
        write_out(out, Box::into_raw(Box::new(BcPartition(part))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn bc_partition_free(part: *mut BcPartition) {
    if !part.is_null() {
        drop(Box::from_raw(part));
    }
}

/// Number of blocks, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn bc_partition_len(part: *const BcPartition) -> usize {
    part.as_ref().map_or(0, |p| p.0.len())
}

/// Base block size, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn bc_partition_k0(part: *const BcPartition) -> usize {
    part.as_ref().map_or(0, |p| p.0.k0())
}

#[no_mangle]
pub unsafe extern "C" fn bc_partition_block(
    part: *const BcPartition,
    index: usize,
    out: *mut BcBlock,
) -> BcStatus {
    guard(|| {
        let part = &deref(part, "partition")?.0;
        let b = part.blocks().get(index).ok_or_else(|| {
            Failure::Range(format!("block {index} of {}", part.len()))
        })?;
        write_out(
            out,
            BcBlock {
                row_start: b.rows.start,
                row_end: b.rows.end,
                col_start: b.cols.start,
                col_end: b.cols.end,
                level: b.level,
                diagonal: b.diagonal,
            },
            "out",
        )
    })
}

// ---------------------------------------------------------------------------
// Estimation

#[no_mangle]
pub extern "C" fn bc_estimator_config_default() -> BcEstimatorConfig {
    BcEstimatorConfig {
        lambda0: DEFAULT_LAMBDA0,
        k0: 0,
        rule: BcRule::Hard,
        eta: 1.0,
        block_norm: BcBlockNorm::Spectral,
        epsilon: 0.0,
        inverse_cap: 0.0,
    }
}

/// Sample covariance (divisor n - 1) of an `n x p` observation matrix.
#[no_mangle]
pub unsafe extern "C" fn bc_sample_covariance(data: *const BcMatrix, out: *mut *mut BcMatrix) -> BcStatus {
    guard(|| {
        let s = sample_covariance(&deref(data, "data")?.0)?;
        put_matrix(out, s)
    })
}

/// Block thresholding of a sample covariance computed from `n` observations.
/// `part` may be NULL to build one from `config`.
#[no_mangle]
pub unsafe extern "C" fn bc_block_threshold(
    sigma_bar: *const BcMatrix,
    part: *const BcPartition,
    config: *const BcEstimatorConfig,
    n: usize,
    out: *mut *mut BcMatrix,
) -> BcStatus {
    guard(|| {
        let sigma_bar = &deref(sigma_bar, "sigma_bar")?.0;
        let cfg = to_config(deref(config, "config")?)?;
        let built;
        let part = match part.as_ref() {
            Some(p) => &p.0,
            None => {
                built = cfg.partition(sigma_bar.rows())?;
                &built
            }
        };
        put_matrix(out, block_threshold(sigma_bar, part, &cfg, n)?)
    })
}

/// Full pipeline on observations. Either output may be NULL to skip it;
/// `omega_out` receives the precision estimate built from the raw estimate.
#[no_mangle]
pub unsafe extern "C" fn bc_estimate(
    data: *const BcMatrix,
    config: *const BcEstimatorConfig,
    sigma_out: *mut *mut BcMatrix,
    omega_out: *mut *mut BcMatrix,
) -> BcStatus {
    guard(|| {
        let est = blockcov::estimate(&deref(data, "data")?.0, &to_config(deref(config, "config")?)?)?;
        if !sigma_out.is_null() {
            put_matrix(sigma_out, est.sigma_hat)?;
        }
        if !omega_out.is_null() {
            put_matrix(omega_out, est.omega_hat)?;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bc_psd_project(m: *const BcMatrix, epsilon: f64, out: *mut *mut BcMatrix) -> BcStatus {
    guard(|| put_matrix(out, psd_project(&deref(m, "matrix")?.0, epsilon)?))
}

/// `U diag(min(1/d, cap)) U^T`, non-positive eigenvalues mapping to `cap`.
#[no_mangle]
pub unsafe extern "C" fn bc_precision_estimate(m: *const BcMatrix, cap: f64, out: *mut *mut BcMatrix) -> BcStatus {
    guard(|| put_matrix(out, precision_estimate_capped(&deref(m, "matrix")?.0, cap)?))
}

#[no_mangle]
pub unsafe extern "C" fn bc_banding_estimate(m: *const BcMatrix, k: usize, out: *mut *mut BcMatrix) -> BcStatus {
    guard(|| put_matrix(out, banding_estimate(&deref(m, "matrix")?.0, k)?))
}

/// Odd `k` is rounded down; `k < 2` is a parameter error.
#[no_mangle]
pub unsafe extern "C" fn bc_tapering_estimate(m: *const BcMatrix, k: usize, out: *mut *mut BcMatrix) -> BcStatus {
    guard(|| put_matrix(out, tapering_estimate(&deref(m, "matrix")?.0, k)?))
}

#[no_mangle]
pub unsafe extern "C" fn bc_spectral_norm(m: *const BcMatrix, out: *mut f64) -> BcStatus {
    guard(|| write_out(out, spectral_norm(&deref(m, "matrix")?.0)?, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn bc_loss(
    estimate: *const BcMatrix,
    truth: *const BcMatrix,
    metric: BcLoss,
    out: *mut f64,
) -> BcStatus {
    guard(|| {
        let metric = match metric {
            BcLoss::Spectral => LossMetric::Spectral,
            BcLoss::Frobenius => LossMetric::Frobenius,
            BcLoss::L1 => LossMetric::L1,
        };
        let v = loss(&deref(estimate, "estimate")?.0, &deref(truth, "truth")?.0, metric)?;
        write_out(out, v, "out")
    })
}

// ---------------------------------------------------------------------------
// Models

#[no_mangle]
pub unsafe extern "C" fn bc_generate_model1(p: usize, rho: f64, seed: u64, out: *mut *mut BcMatrix) -> BcStatus {
    guard(|| put_matrix(out, generate_model1(p, rho, seed)?))
}

#[no_mangle]
pub unsafe extern "C" fn bc_generate_model2(p: usize, seed: u64, out: *mut *mut BcMatrix) -> BcStatus {
    guard(|| put_matrix(out, generate_model2(p, seed)?))
}

/// `n` rows drawn i.i.d. from N(0, sigma).
#[no_mangle]
pub unsafe extern "C" fn bc_sample_gaussian(
    sigma: *const BcMatrix,
    n: usize,
    seed: u64,
    out: *mut *mut BcMatrix,
) -> BcStatus {
    guard(|| put_matrix(out, sample_gaussian(&deref(sigma, "sigma")?.0, n, seed)?))
}
