use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use blockcov_ffi::*;

fn last_error() -> String {
    let p = bc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

unsafe fn matrix(rows: usize, cols: usize, data: &[f64]) -> *mut BcMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(bc_matrix_new(rows, cols, data.as_ptr(), &mut m), BcStatus::Ok);
    m
}

unsafe fn contents(m: *const BcMatrix) -> Vec<f64> {
    let len = bc_matrix_rows(m) * bc_matrix_cols(m);
    let mut buf = vec![f64::NAN; len];
    assert_eq!(bc_matrix_copy_data(m, buf.as_mut_ptr(), len), BcStatus::Ok);
    buf
}

#[test]
fn matrix_round_trip_and_bounds() {
    unsafe {
        let m = matrix(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!((bc_matrix_rows(m), bc_matrix_cols(m)), (2, 3));
        let mut v = 0.0;
        assert_eq!(bc_matrix_get(m, 1, 2, &mut v), BcStatus::Ok);
        assert_eq!(v, 6.0);
        assert_eq!(bc_matrix_get(m, 2, 0, &mut v), BcStatus::OutOfRange);
        assert!(last_error().contains("outside"));
        let mut small = [0.0; 5];
        assert_eq!(bc_matrix_copy_data(m, small.as_mut_ptr(), 5), BcStatus::OutOfRange);
        assert_eq!(contents(m), [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        bc_matrix_free(m);
        bc_matrix_free(ptr::null_mut());
        assert_eq!(bc_matrix_rows(ptr::null()), 0);
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(bc_matrix_new(2, 2, ptr::null(), &mut out), BcStatus::NullPointer);
        let nan = [f64::NAN];
        assert_eq!(bc_matrix_new(1, 1, nan.as_ptr(), &mut out), BcStatus::Parameter);
        let rect = matrix(2, 3, &[0.0; 6]);
        let mut norm = 0.0;
        assert_eq!(bc_spectral_norm(rect, &mut norm), BcStatus::Ok);
        assert_eq!(bc_psd_project(rect, 0.0, &mut out), BcStatus::Dimension);
        assert!(last_error().starts_with("dimension"));
        assert_eq!(bc_tapering_estimate(rect, 1, &mut out), BcStatus::Dimension);
        let mut part = ptr::null_mut();
        assert_eq!(bc_partition_new(0, 1, &mut part), BcStatus::Parameter);
        let missing = CString::new("/nonexistent/blockcov.csv").unwrap();
        assert_eq!(bc_matrix_read_csv(missing.as_ptr(), &mut out), BcStatus::Io);
        let one = matrix(1, 3, &[1.0, 2.0, 3.0]);
        assert_eq!(bc_sample_covariance(one, &mut out), BcStatus::InsufficientData);
        bc_matrix_free(rect);
        bc_matrix_free(one);
        assert_eq!(bc_matrix_identity(2, &mut out), BcStatus::Ok);
        assert!(bc_last_error().is_null());
        bc_matrix_free(out);
        let name = CStr::from_ptr(bc_status_name(BcStatus::InsufficientData));
        assert_eq!(name.to_str().unwrap(), "insufficient-data");
    }
}

#[test]
fn partition_p4_blocks() {
    unsafe {
        let mut part = ptr::null_mut();
        assert_eq!(bc_partition_new(4, 1, &mut part), BcStatus::Ok);
        assert_eq!(bc_partition_len(part), 14);
        assert_eq!(bc_partition_k0(part), 1);
        let mut b = BcBlock {
            row_start: 0,
            row_end: 0,
            col_start: 0,
            col_end: 0,
            level: 0,
            diagonal: false,
        };
        let mut upper = Vec::new();
        for i in 0..14 {
            assert_eq!(bc_partition_block(part, i, &mut b), BcStatus::Ok);
            if b.row_start <= b.col_start {
                upper.push((b.row_start, b.row_end, b.col_start, b.col_end, b.level));
            }
        }
        upper.sort();
        assert_eq!(
            upper,
            [
                (0, 1, 0, 1, 1),
                (0, 1, 1, 2, 1),
                (0, 1, 2, 3, 1),
                (0, 2, 3, 4, 2),
                (1, 2, 1, 2, 1),
                (1, 2, 2, 3, 1),
                (2, 3, 2, 3, 1),
                (2, 3, 3, 4, 1),
                (3, 4, 3, 4, 1)
            ]
        );
        assert_eq!(bc_partition_block(part, 14, &mut b), BcStatus::OutOfRange);
        bc_partition_free(part);
    }
}

#[test]
fn estimate_matches_rust_api() {
    unsafe {
        let mut sigma = ptr::null_mut();
        assert_eq!(bc_generate_model1(30, 0.6, 5, &mut sigma), BcStatus::Ok);
        let mut data = ptr::null_mut();
        assert_eq!(bc_sample_gaussian(sigma, 80, 6, &mut data), BcStatus::Ok);

        let cfg = bc_estimator_config_default();
        let mut hat = ptr::null_mut();
        let mut omega = ptr::null_mut();
        assert_eq!(bc_estimate(data, &cfg, &mut hat, &mut omega), BcStatus::Ok);

        let rust_data = blockcov::sample_gaussian(&blockcov::generate_model1(30, 0.6, 5).unwrap(), 80, 6).unwrap();
        let est = blockcov::estimate(&rust_data, &blockcov::EstimatorConfig::default()).unwrap();
        assert_eq!(contents(hat), est.sigma_hat.data());
        assert_eq!(contents(omega), est.omega_hat.data());

        // the two-step route agrees with the one-shot pipeline
        let mut sbar = ptr::null_mut();
        assert_eq!(bc_sample_covariance(data, &mut sbar), BcStatus::Ok);
        let mut hat2 = ptr::null_mut();
        assert_eq!(bc_block_threshold(sbar, ptr::null(), &cfg, 80, &mut hat2), BcStatus::Ok);
        assert_eq!(contents(hat2), contents(hat));

        let mut l = 0.0;
        assert_eq!(bc_loss(hat, sigma, BcLoss::Spectral, &mut l), BcStatus::Ok);
        assert!(l.is_finite() && l >= 0.0);

        let mut bad = cfg;
        bad.rule = BcRule::AdaptiveLasso;
        bad.eta = 0.5;
        assert_eq!(bc_estimate(data, &bad, &mut hat2, ptr::null_mut()), BcStatus::Parameter);

        for m in [sigma, data, hat, omega, sbar, hat2] {
            bc_matrix_free(m);
        }
    }
}

#[test]
fn csv_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.csv").to_str().unwrap()).unwrap();
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(bc_generate_model2(6, 3, &mut m), BcStatus::Ok);
        assert_eq!(bc_matrix_write_csv(m, path.as_ptr()), BcStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(bc_matrix_read_csv(path.as_ptr(), &mut back), BcStatus::Ok);
        assert_eq!(contents(back), contents(m));
        let mut band = ptr::null_mut();
        assert_eq!(bc_banding_estimate(m, 0, &mut band), BcStatus::Ok);
        let b = contents(band);
        assert!((0..6).all(|i| (0..6).all(|j| i == j || b[i * 6 + j] == 0.0)));
        for x in [m, back, band] {
            bc_matrix_free(x);
        }
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libblockcov_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("a C compiler named cc");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "blocks=14\nnorm=1\nerror=dimension\n");
}
