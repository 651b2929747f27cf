//! Command-line front end. `run` is the whole program minus process setup,
//! so tests can drive it in-process.
//!
//! Exit codes: 0 success, 1 domain error or failed check, 2 usage error.
//! Domain errors are reported as one line `error: <kind>: <message>`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::{banding_estimate, select_bandwidth, tapering_estimate, BandwidthSpec};
use crate::blocking::BlockPartition;
use crate::csvio::{read_matrix, write_matrix};
use crate::error::{Error, Result};
use crate::estimators::{
    block_threshold, precision_estimate_capped, psd_project, sample_covariance, BlockNorm,
    EstimatorConfig, ThresholdRule, DEFAULT_LAMBDA0,
};
use crate::experiments::{
    compression_suite, concentration_suite, model1_block_norm_suite, partition_suite, read_results,
    run_experiment, write_results, write_summary, ConcentrationConfig, ExperimentSpec, C0,
};
use crate::models::{check_class_membership, sample_gaussian_with, seeded_rng, ClassParams, CovarianceModel, DEFAULT_RHO};

/// Environment variable that supplies the seed when `--seed` is absent.
pub const SEED_ENV: &str = "BLOCKCOV_SEED";

#[derive(Debug, Parser)]
#[command(name = "blockcov", version, about = "Block thresholding covariance estimation")]
pub struct Cli {
    /// Log more (repeatable); warnings are always shown.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Blockthresh,
    Sample,
    Banding,
    Tapering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Hard,
    Soft,
    Alasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlockNormArg {
    Spectral,
    Frobenius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    /// n = p ∈ {50, 100, 200}, 50 replicates
    Desk,
    /// n = p ∈ {50, 100, 200, 400}, 200 replicates
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Concentration,
    Compression,
    Blocknorm,
    Partition,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the block partition as JSON (1-based, inclusive ranges).
    Partition {
        #[arg(long)]
        p: usize,
        /// Base block size [default: max(1, floor(ln p))]
        #[arg(long)]
        k0: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Estimate a covariance (or precision) matrix from observations.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo experiment, or generate a model covariance and data.
    Simulate(SimulateArgs),
    /// Summarize a raw results CSV into per-(method, size, metric) quantiles.
    Summarize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check membership of a covariance matrix in the bandable class.
    CheckClass {
        /// Covariance matrix CSV
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long = "M")]
        m: f64,
        #[arg(long = "M0")]
        m0: f64,
    },
    /// Run an empirical check; exits 0 iff there are no violations.
    Check(CheckArgs),
}

#[derive(Debug, clap::Args)]
pub struct EstimateArgs {
    /// Observations CSV, one row per observation (`-` for stdin)
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "blockthresh")]
    pub method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_LAMBDA0)]
    pub lambda0: f64,
    #[arg(long)]
    pub k0: Option<usize>,
    #[arg(long, value_enum, default_value = "hard")]
    pub rule: RuleArg,
    /// Adaptive lasso exponent (>= 1)
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, value_enum, default_value = "spectral")]
    pub block_norm: BlockNormArg,
    /// Project onto eigenvalues >= epsilon
    #[arg(long)]
    pub psd: bool,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Output the precision estimate instead of the covariance
    #[arg(long)]
    pub inverse: bool,
    /// Cap on inverted eigenvalues [default: n]
    #[arg(long)]
    pub inverse_cap: Option<f64>,
    /// Banding/tapering bandwidth
    #[arg(long, conflicts_with = "alpha")]
    pub k: Option<usize>,
    /// Decay rate used to pick the banding/tapering bandwidth
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the block partition as JSON
    #[arg(long)]
    pub partition_json: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Experiment spec JSON
    #[arg(long, conflicts_with_all = ["preset", "p", "n", "rho", "sigma_output"])]
    pub config: Option<PathBuf>,
    /// Built-in comparison experiment (needs --model)
    #[arg(long, value_enum, conflicts_with_all = ["p", "n", "rho", "sigma_output"])]
    pub preset: Option<PresetArg>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Draw this many observations instead of printing the covariance
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Raw results CSV, or the generated matrix
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Per-(method, size, metric) summary CSV
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Where to write the drawn covariance when --n is given
    #[arg(long)]
    pub sigma_output: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteArg,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials (concentration, compression) or draws (blocknorm)
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub p: usize,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 1.01)]
    pub t: f64,
    /// Largest dimension (compression, partition)
    #[arg(long)]
    pub max_p: Option<usize>,
    /// Largest base block size (partition)
    #[arg(long, default_value_t = 8)]
    pub max_k0: usize,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

enum Failure {
    Usage(String),
    Domain(Error),
    Violations(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(e.into())
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    init_logging(cli.verbose);
    let outcome = dispatch(cli.command, out);
    let _ = out.flush();
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: usage: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(err, "error: {}", one_line(&e.to_string()));
            1
        }
        Err(Failure::Violations(msg)) => {
            let _ = writeln!(err, "error: violation: {msg}");
            1
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Partition { p, k0, output } => {
            let part = match k0 {
                Some(k0) => BlockPartition::build(p, k0)?,
                None => BlockPartition::with_default_k0(p)?,
            };
            emit_json(output.as_deref(), out, &part.records())
        }
        Command::Estimate(args) => cmd_estimate(args, out),
        Command::Simulate(args) => cmd_simulate(args, out),
        Command::Summarize { input, output } => {
            let result = read_results(open_input(&input)?)?;
            if result.records.is_empty() {
                return Err(Error::Csv { line: 0, msg: "no result rows".into() }.into());
            }
            let rows = result.summaries();
            with_output(output.as_deref(), out, |w| write_summary(w, &rows))
        }
        Command::CheckClass { input, alpha, m, m0 } => {
            let sigma = read_matrix(open_input(&input)?)?;
            let report = check_class_membership(&sigma, &ClassParams { alpha, m, m0 })?;
            emit_json(None, out, &report)
        }
        Command::Check(args) => cmd_check(args, out),
    }
}

fn open_input(path: &Path) -> Result<Box<dyn Read>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdin()))
    } else {
        Ok(Box::new(File::open(path).map_err(|e| {
            Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?))
    }
}

fn with_output(
    path: Option<&Path>,
    out: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> CliResult {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| {
                Error::Io(io::Error::new(e.kind(), format!("{}: {e}", p.display())))
            })?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
        }
        None => f(out)?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(path: Option<&Path>, out: &mut dyn Write, value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    with_output(path, out, |w| {
        writeln!(w, "{text}")?;
        Ok(())
    })
}

fn env_seed() -> std::result::Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// `--seed`, else `BLOCKCOV_SEED`, else `fallback`.
fn resolve_seed(flag: Option<u64>, fallback: u64) -> std::result::Result<u64, Failure> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(fallback),
    })
}

fn cmd_estimate(a: EstimateArgs, out: &mut dyn Write) -> CliResult {
    if a.partition_json.is_some() && a.method != MethodArg::Blockthresh {
        return Err(Failure::Usage("--partition-json needs --method blockthresh".into()));
    }
    let data = read_matrix(open_input(&a.input)?)?;
    let n = data.rows();
    let p = data.cols();
    let sigma_bar = sample_covariance(&data)?;

    let rule = match a.rule {
        RuleArg::Hard => ThresholdRule::hard(),
        RuleArg::Soft => ThresholdRule::soft(),
        RuleArg::Alasso => ThresholdRule::adaptive_lasso(a.eta)?,
    };
    let rule = rule.with_norm(match a.block_norm {
        BlockNormArg::Spectral => BlockNorm::Spectral,
        BlockNormArg::Frobenius => BlockNorm::Frobenius,
    });
    let cfg = EstimatorConfig {
        lambda0: a.lambda0,
        k0: a.k0,
        rule,
        epsilon_n: a.epsilon,
        inverse_cap: a.inverse_cap,
    };
    cfg.validate()?;

    if a.method != MethodArg::Blockthresh
        && (a.k0.is_some() || a.rule != RuleArg::Hard || a.block_norm != BlockNormArg::Spectral)
    {
        log::warn!("thresholding flags are ignored by --method {:?}", a.method);
    }
    let bandwidth = |rate: fn(f64) -> BandwidthSpec| -> std::result::Result<usize, Failure> {
        let spec = match (a.k, a.alpha) {
            (Some(k), None) => BandwidthSpec::Explicit { k },
            (None, Some(alpha)) => rate(alpha),
            _ => return Err(Failure::Usage("banding/tapering need exactly one of --k or --alpha".into())),
        };
        Ok(select_bandwidth(spec, n, p)?)
    };

    let mut est = match a.method {
        MethodArg::Sample => sigma_bar.clone(),
        MethodArg::Blockthresh => {
            for w in cfg.warnings() {
                log::warn!("{w}");
            }
            let part = cfg.partition(p)?;
            if let Some(path) = &a.partition_json {
                emit_json(Some(path), out, &part.records())?;
            }
            block_threshold(&sigma_bar, &part, &cfg, n)?
        }
        MethodArg::Banding => {
            let k = bandwidth(|alpha| BandwidthSpec::BandingRate { alpha })?;
            banding_estimate(&sigma_bar, k)?
        }
        MethodArg::Tapering => {
            let k = bandwidth(|alpha| BandwidthSpec::TaperingRate { alpha })?;
            tapering_estimate(&sigma_bar, k)?
        }
    };
    if a.psd {
        est = psd_project(&est, a.epsilon)?;
    }
    if a.inverse {
        est = precision_estimate_capped(&est, cfg.inverse_cap.unwrap_or(n as f64))?;
    }
    with_output(a.output.as_deref(), out, |w| write_matrix(w, &est))
}

fn model_from(arg: ModelArg, rho: Option<f64>) -> std::result::Result<CovarianceModel, Failure> {
    match (arg, rho) {
        (ModelArg::One, rho) => Ok(CovarianceModel::Model1 { rho: rho.unwrap_or(DEFAULT_RHO) }),
        (ModelArg::Two, None) => Ok(CovarianceModel::Model2),
        (ModelArg::Two, Some(_)) => Err(Failure::Usage("--rho applies to --model 1 only".into())),
    }
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> CliResult {
    let spec = if let Some(path) = &a.config {
        if a.model.is_some() {
            return Err(Failure::Usage("--model comes from the config file".into()));
        }
        let mut text = String::new();
        open_input(path)?.read_to_string(&mut text)?;
        let mut spec = ExperimentSpec::from_json(&text)?;
        spec.seed = resolve_seed(a.seed, spec.seed)?;
        Some(spec)
    } else if let Some(preset) = a.preset {
        let model = model_from(
            a.model.ok_or_else(|| Failure::Usage("--preset needs --model".into()))?,
            None,
        )?;
        let seed = resolve_seed(a.seed, 0)?;
        Some(match preset {
            PresetArg::Desk => ExperimentSpec::desk_scale(model, seed),
            PresetArg::Full => ExperimentSpec::full_scale(model, seed),
        })
    } else {
        None
    };

    if let Some(spec) = spec {
        let result = run_experiment(&spec, a.jobs)?;
        with_output(a.output.as_deref(), out, |w| write_results(w, &result))?;
        if let Some(path) = &a.summary {
            let rows = result.summaries();
            with_output(Some(path), out, |w| write_summary(w, &rows))?;
        }
        return Ok(());
    }

    if a.summary.is_some() {
        return Err(Failure::Usage("--summary needs --config or --preset".into()));
    }
    let (Some(model), Some(p)) = (a.model, a.p) else {
        return Err(Failure::Usage("give --config, --preset, or --model with --p".into()));
    };
    let model = model_from(model, a.rho)?;
    let mut rng = seeded_rng(resolve_seed(a.seed, 0)?);
    let sigma = model.draw(p, &mut rng)?;
    match a.n {
        None => {
            if a.sigma_output.is_some() {
                return Err(Failure::Usage("--sigma-output needs --n".into()));
            }
            with_output(a.output.as_deref(), out, |w| write_matrix(w, &sigma))
        }
        Some(n) => {
            let data = sample_gaussian_with(&sigma, n, &mut rng)?;
            if let Some(path) = &a.sigma_output {
                with_output(Some(path), out, |w| write_matrix(w, &sigma))?;
            }
            with_output(a.output.as_deref(), out, |w| write_matrix(w, &data))
        }
    }
}

fn cmd_check(a: CheckArgs, out: &mut dyn Write) -> CliResult {
    let seed = resolve_seed(a.seed, 0)?;
    let violations = match a.suite {
        SuiteArg::Concentration => {
            let cfg = ConcentrationConfig {
                p: a.p,
                n: a.n,
                t: a.t,
                trials: a.trials.unwrap_or(500),
                seed,
                k0: None,
                c0: C0,
            };
            let report = concentration_suite(&cfg, a.jobs)?;
            emit_json(None, out, &report)?;
            report.violations
        }
        SuiteArg::Compression => {
            let report = compression_suite(a.trials.unwrap_or(500), a.max_p.unwrap_or(24), seed)?;
            emit_json(None, out, &report)?;
            report.violations + report.equality_violations
        }
        SuiteArg::Blocknorm => {
            let report = model1_block_norm_suite(a.p, a.trials.unwrap_or(50), seed)?;
            emit_json(None, out, &report)?;
            report.violations
        }
        SuiteArg::Partition => {
            let problems = partition_suite(a.max_p.unwrap_or(200), a.max_k0)?;
            #[derive(Serialize)]
            struct PartitionReport<'a> {
                violations: usize,
                problems: &'a [String],
            }
            emit_json(
                None,
                out,
                &PartitionReport {
                    violations: problems.len(),
                    problems: &problems[..problems.len().min(20)],
                },
            )?;
            problems.len()
        }
    };
    if violations > 0 {
        return Err(Failure::Violations(format!("{violations} violation(s)")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("blockcov").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn partition_p4() {
        let (code, out, _) = call(&["partition", "--p", "4", "--k0", "1"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 14);
    }

    #[test]
    fn usage_and_domain_errors() {
        assert_eq!(call(&["partition", "--bogus"]).0, 2);
        assert_eq!(call(&[]).0, 2);
        let (code, _, err) = call(&["partition", "--p", "0"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error: parameter:"), "{err}");
        assert_eq!(err.lines().count(), 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn compression_check_passes() {
        let (code, out, _) = call(&["check", "--suite", "compression", "--trials", "50"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"violations\": 0"));
    }
}
