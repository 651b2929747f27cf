mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blockcov::csvio::read_matrix;
use common::*;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(rel)
}

fn blockcov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockcov"))
        .args(args)
        .env_remove("BLOCKCOV_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn partition_json_matches_golden() {
    let out = blockcov(&["partition", "--p", "4", "--k0", "1"]);
    let golden = std::fs::read_to_string(fixture("golden/partition_p4_k1.json")).unwrap();
    assert_eq!(stdout(&out), golden);
    let v: serde_json::Value = serde_json::from_str(&golden).unwrap();
    let blocks = v.as_array().unwrap();
    assert_eq!(blocks.len(), 14);
    // field order is part of the schema
    let first: Vec<&str> = golden.lines().skip(2).take(6).map(|l| l.trim().split('"').nth(1).unwrap()).collect();
    assert_eq!(first, ["row_start", "row_end", "col_start", "col_end", "level", "diagonal"]);
}

#[test]
fn check_class_matches_golden() {
    let input = fixture("data/identity3.csv");
    let out = blockcov(&["check-class", "--input", input.to_str().unwrap(), "--alpha", "1", "--M", "0.5", "--M0", "1"]);
    let golden = std::fs::read_to_string(fixture("golden/check_class_identity3.json")).unwrap();
    assert_eq!(stdout(&out), golden);
}

#[test]
fn sample_method_is_the_sample_covariance() {
    let input = fixture("data/id20.csv");
    let out = blockcov(&["estimate", "--input", input.to_str().unwrap(), "--method", "sample"]);
    let got = read_matrix(stdout(&out).as_bytes()).unwrap();
    let data = read_matrix(std::fs::File::open(&input).unwrap()).unwrap();
    let want = naive_sample_covariance(&data);
    assert_eq!(got.shape(), (4, 4));
    assert!(got.sub(&want).unwrap().max_abs() <= 1e-12);
    // every number printed with 17 significant digits round-trips
    for field in stdout(&out).trim().split([',', '\n']) {
        let v: f64 = field.parse().unwrap();
        assert_eq!(blockcov::csvio::fmt_num(v), field);
    }
}

#[test]
fn precision_output_inverts_the_projection() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    let data_s = data.to_str().unwrap();
    stdout(&blockcov(&["simulate", "--model", "2", "--p", "8", "--n", "400", "--seed", "1", "--output", data_s]));
    let sigma = read_matrix(stdout(&blockcov(&["estimate", "--input", data_s, "--psd", "--epsilon", "0.05"])).as_bytes()).unwrap();
    let omega = read_matrix(
        stdout(&blockcov(&["estimate", "--input", data_s, "--psd", "--epsilon", "0.05", "--inverse"])).as_bytes(),
    )
    .unwrap();
    let resid = naive_matmul(&omega, &sigma).sub(&blockcov::Matrix::identity(8)).unwrap();
    assert!(oracle_spectral_norm(&resid) < 1e-6);
}

#[test]
fn partition_dump_matches_partition_command() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("part.json");
    let input = fixture("data/id20.csv");
    stdout(&blockcov(&[
        "estimate",
        "--input",
        input.to_str().unwrap(),
        "--k0",
        "1",
        "--partition-json",
        dump.to_str().unwrap(),
    ]));
    let direct = stdout(&blockcov(&["partition", "--p", "4", "--k0", "1"]));
    assert_eq!(std::fs::read_to_string(dump).unwrap(), direct);
}

#[test]
fn baselines_through_the_cli() {
    let input = fixture("data/id20.csv");
    let input = input.to_str().unwrap();
    let band = read_matrix(stdout(&blockcov(&["estimate", "--input", input, "--method", "banding", "--k", "1"])).as_bytes()).unwrap();
    let sample = read_matrix(stdout(&blockcov(&["estimate", "--input", input, "--method", "sample"])).as_bytes()).unwrap();
    let tri = blockcov::Matrix::from_fn(4, 4, |i, j| if i.abs_diff(j) <= 1 { sample[(i, j)] } else { 0.0 });
    assert_eq!(band, tri);
    assert_eq!(blockcov(&["estimate", "--input", input, "--method", "banding", "--k", "0"]).status.code(), Some(1));
    let taper = read_matrix(stdout(&blockcov(&["estimate", "--input", input, "--method", "tapering", "--k", "4"])).as_bytes()).unwrap();
    assert_eq!(taper[(0, 3)], 0.5 * sample[(0, 3)]);
    assert_eq!(taper[(0, 2)], sample[(0, 2)]);
    let out = blockcov(&["estimate", "--input", input, "--method", "tapering"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: usage:"));
}

#[test]
fn error_classes_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "1,2\n3\n").unwrap();
    let out = blockcov(&["estimate", "--input", ragged.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr(&out), "error: csv: line 2: 1 fields, expected 2\n");

    let rect = dir.path().join("rect.csv");
    std::fs::write(&rect, "1,2,3\n4,5,6\n").unwrap();
    let out = blockcov(&["check-class", "--input", rect.to_str().unwrap(), "--alpha", "1", "--M", "1", "--M0", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: dimension:"), "{}", stderr(&out));

    let one_row = dir.path().join("one.csv");
    std::fs::write(&one_row, "1,2,3\n").unwrap();
    let out = blockcov(&["estimate", "--input", one_row.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: insufficient data:"));

    let out = blockcov(&["estimate", "--input", "/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: io:"));

    for args in [&["partition", "--p", "4", "--bogus"][..], &["frobnicate"], &["check", "--suite", "nope"]] {
        assert_eq!(blockcov(args).status.code(), Some(2), "{args:?}");
    }
    let out = blockcov(&["simulate", "--model", "1", "--p", "5", "--seed", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_blockcov"))
        .args(["simulate", "--model", "1", "--p", "5"])
        .env("BLOCKCOV_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_every_estimate_flag() {
    let help = stdout(&blockcov(&["estimate", "--help"]));
    for flag in [
        "--input", "--method", "--lambda0", "--k0", "--rule", "--eta", "--block-norm", "--psd", "--epsilon", "--inverse",
        "--inverse-cap", "--k", "--alpha", "--output", "--partition-json",
    ] {
        assert!(help.contains(flag), "missing {flag}");
    }
    let top = stdout(&blockcov(&["--help"]));
    for cmd in ["partition", "estimate", "simulate", "summarize", "check-class", "check"] {
        assert!(top.contains(cmd), "missing {cmd}");
    }
}

#[test]
fn checks_exit_zero_without_violations() {
    for args in [
        &["check", "--suite", "compression"][..],
        &["check", "--suite", "partition", "--max-p", "40"],
        &["check", "--suite", "blocknorm", "--p", "60", "--trials", "5"],
        &["check", "--suite", "concentration", "--trials", "20"],
    ] {
        let out = blockcov(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
        assert!(stdout(&out).contains("\"violations\": 0"));
    }
}

#[test]
fn summarize_reproduces_the_simulate_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"model": {"kind": "model2"}, "sizes": [{"n": 30, "p": 12}], "reps": 5, "seed": 2,
            "methods": [{"kind": "blockthresh", "psd": true}, {"kind": "sample"}], "metrics": ["spectral", "l1"]}"#,
    )
    .unwrap();
    let (res, sum) = (dir.path().join("r.csv"), dir.path().join("s.csv"));
    stdout(&blockcov(&[
        "simulate",
        "--config",
        spec.to_str().unwrap(),
        "--output",
        res.to_str().unwrap(),
        "--summary",
        sum.to_str().unwrap(),
        "--jobs",
        "2",
    ]));
    let results = std::fs::read_to_string(&res).unwrap();
    assert!(results.starts_with("method,n,p,rep,metric,loss\n"));
    assert_eq!(results.lines().count(), 1 + 5 * 2 * 2);
    let summary = std::fs::read_to_string(&sum).unwrap();
    assert!(summary.starts_with("method,n,p,metric,reps,mean,std_err,min,q1,median,q3,max\n"));
    let again = stdout(&blockcov(&["summarize", "--input", res.to_str().unwrap()]));
    assert_eq!(again, summary);
}

#[test]
fn generation_path_outputs() {
    let sigma = read_matrix(stdout(&blockcov(&["simulate", "--model", "1", "--p", "6", "--rho", "0.3", "--seed", "4"])).as_bytes()).unwrap();
    assert_eq!(sigma, blockcov::generate_model1(6, 0.3, 4).unwrap());
    let out = blockcov(&["simulate", "--model", "2", "--p", "6", "--rho", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
}
