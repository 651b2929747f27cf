//! Monte Carlo comparison of estimators and empirical checks of the
//! concentration, norm compression and block-norm bounds.
//!
//! Replicate `r` of size index `s` draws from stream `(s << 32) | r` of the
//! base seed, so output is independent of worker count and scheduling.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    banding_estimate, loss, select_bandwidth, tapering_estimate, BandwidthSpec, LossMetric,
};
use crate::blocking::{norm_compression, BlockPartition};
use crate::csvio::fmt_num;
use crate::error::{Error, Result};
use crate::estimators::{block_threshold, psd_project, sample_covariance, EstimatorConfig};
use crate::linalg::spectral_norm;
use crate::matrix::Matrix;
use crate::models::{
    check_class_membership, model1_with, sample_gaussian_with, stream_rng, ClassParams,
    CovarianceModel, DEFAULT_RHO,
};

/// Concentration constant that makes the block deviation bound hold.
pub const C0: f64 = 5.44;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Size {
    pub n: usize,
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Sample,
    Blockthresh {
        #[serde(default)]
        config: EstimatorConfig,
        /// Report the PSD projection instead of the raw estimate.
        #[serde(default)]
        psd: bool,
    },
    Banding { bandwidth: BandwidthSpec },
    Tapering { bandwidth: BandwidthSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub method: Method,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        MethodSpec { label: None, method }
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let bw = |b: &BandwidthSpec| match b {
            BandwidthSpec::Explicit { k } => format!("k={k}"),
            BandwidthSpec::BandingRate { alpha } | BandwidthSpec::TaperingRate { alpha } => {
                format!("alpha={alpha}")
            }
        };
        match &self.method {
            Method::Sample => "sample".into(),
            Method::Blockthresh { psd: false, .. } => "blockthresh".into(),
            Method::Blockthresh { psd: true, .. } => "blockthresh_psd".into(),
            Method::Banding { bandwidth } => format!("banding({})", bw(bandwidth)),
            Method::Tapering { bandwidth } => format!("tapering({})", bw(bandwidth)),
        }
    }

    /// Fits the method on a sample covariance computed from `n` observations.
    pub fn fit(&self, sigma_bar: &Matrix, n: usize) -> Result<Matrix> {
        let p = sigma_bar.rows();
        match &self.method {
            Method::Sample => Ok(sigma_bar.clone()),
            Method::Blockthresh { config, psd } => {
                let part = config.partition(p)?;
                let hat = block_threshold(sigma_bar, &part, config, n)?;
                if *psd {
                    psd_project(&hat, config.epsilon_n)
                } else {
                    Ok(hat)
                }
            }
            Method::Banding { bandwidth } => {
                let k = select_bandwidth(*bandwidth, n, p.max(2))?;
                banding_estimate(sigma_bar, k)
            }
            Method::Tapering { bandwidth } => {
                // the taper needs an even k >= 2
                let k = select_bandwidth(*bandwidth, n, p.max(2))?.max(2);
                let k = k - k % 2;
                tapering_estimate(sigma_bar, k)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: CovarianceModel,
    pub sizes: Vec<Size>,
    pub reps: usize,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<LossMetric>,
    #[serde(default)]
    pub seed: u64,
}

fn default_metrics() -> Vec<LossMetric> {
    vec![LossMetric::Spectral]
}

/// Taper decay rates compared against the adaptive estimator.
pub const TAPER_ALPHAS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

impl ExperimentSpec {
    /// Block thresholding at λ0 = 6 against tapering over [`TAPER_ALPHAS`].
    pub fn comparison(model: CovarianceModel, sizes: &[usize], reps: usize, seed: u64) -> Self {
        let mut methods = vec![MethodSpec::new(Method::Blockthresh {
            config: EstimatorConfig::default(),
            psd: false,
        })];
        methods.extend(TAPER_ALPHAS.iter().map(|&alpha| {
            MethodSpec::new(Method::Tapering {
                bandwidth: BandwidthSpec::TaperingRate { alpha },
            })
        }));
        ExperimentSpec {
            model,
            sizes: sizes.iter().map(|&s| Size { n: s, p: s }).collect(),
            reps,
            methods,
            metrics: vec![LossMetric::Spectral],
            seed,
        }
    }

    /// Minute-scale default: n = p ∈ {50, 100, 200}, 50 replicates.
    pub fn desk_scale(model: CovarianceModel, seed: u64) -> Self {
        Self::comparison(model, &[50, 100, 200], 50, seed)
    }

    /// n = p ∈ {50, 100, 200, 400}, 200 replicates.
    pub fn full_scale(model: CovarianceModel, seed: u64) -> Self {
        Self::comparison(model, &[50, 100, 200, 400], 200, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::param("reps must be >= 1"));
        }
        if self.methods.is_empty() || self.metrics.is_empty() || self.sizes.is_empty() {
            return Err(Error::param("need at least one size, method and metric"));
        }
        if let Some(s) = self.sizes.iter().find(|s| s.n < 2 || s.p == 0) {
            return Err(Error::param(format!("invalid size n={} p={}", s.n, s.p)));
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.methods {
            let label = m.label();
            if label.is_empty() || label.contains([',', '"', '\n']) {
                return Err(Error::param(format!("method label {label:?} is not CSV-safe")));
            }
            if !seen.insert(label.clone()) {
                return Err(Error::param(format!("duplicate method label {label:?}")));
            }
            if let Method::Blockthresh { config, .. } = &m.method {
                config.validate()?;
            }
        }
        if let CovarianceModel::Model1 { rho } = self.model {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::param(format!("rho must lie in (0, 1), got {rho}")));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub rep: usize,
    pub metric: LossMetric,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Ordered by size, replicate, method, metric.
    pub records: Vec<LossRecord>,
}

pub fn replicate_stream(size_index: usize, rep: usize) -> u64 {
    ((size_index as u64) << 32) | rep as u64
}

fn run_replicate(spec: &ExperimentSpec, size_index: usize, rep: usize) -> Result<Vec<LossRecord>> {
    let Size { n, p } = spec.sizes[size_index];
    let mut rng = stream_rng(spec.seed, replicate_stream(size_index, rep));
    let sigma = spec.model.draw(p, &mut rng)?;
    let data = sample_gaussian_with(&sigma, n, &mut rng)?;
    let sigma_bar = sample_covariance(&data)?;
    let mut out = Vec::with_capacity(spec.methods.len() * spec.metrics.len());
    for m in &spec.methods {
        let est = m.fit(&sigma_bar, n)?;
        let label = m.label();
        for &metric in &spec.metrics {
            out.push(LossRecord {
                method: label.clone(),
                n,
                p,
                rep,
                metric,
                loss: loss(&est, &sigma, metric)?,
            });
        }
    }
    Ok(out)
}

/// Runs `f` on a pool of `jobs` workers (`0` = rayon's default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::param(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<ExperimentResult> {
    spec.validate()?;
    let tasks: Vec<(usize, usize)> = (0..spec.sizes.len())
        .flat_map(|s| (0..spec.reps).map(move |r| (s, r)))
        .collect();
    let outcomes: Vec<Result<Vec<LossRecord>>> = with_jobs(jobs, || {
        tasks
            .par_iter()
            .map(|&(s, r)| run_replicate(spec, s, r))
            .collect()
    })?;
    let mut records = Vec::with_capacity(tasks.len() * spec.methods.len());
    for (&(s, r), outcome) in tasks.iter().zip(outcomes) {
        match outcome {
            Ok(recs) => records.extend(recs),
            Err(e) => {
                return Err(Error::Replicate {
                    n: spec.sizes[s].n,
                    p: spec.sizes[s].p,
                    rep: r,
                    seed: spec.seed,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(ExperimentResult { records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub metric: LossMetric,
    pub reps: usize,
    pub mean: f64,
    pub std_err: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

fn summarize_group(method: &str, n: usize, p: usize, metric: LossMetric, values: &[f64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let std_err = if v.len() > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0)).sqrt() / k.sqrt()
    } else {
        0.0
    };
    Summary {
        method: method.to_string(),
        n,
        p,
        metric,
        reps: v.len(),
        mean,
        std_err,
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    }
}

impl ExperimentResult {
    /// One row per (size, method, metric) in first-appearance order.
    pub fn summaries(&self) -> Vec<Summary> {
        let mut order: Vec<(usize, usize, String, LossMetric)> = Vec::new();
        let mut groups: BTreeMap<(usize, usize, String, LossMetric), Vec<f64>> = BTreeMap::new();
        for r in &self.records {
            let key = (r.n, r.p, r.method.clone(), r.metric);
            groups.entry(key.clone()).or_insert_with(|| {
                order.push(key.clone());
                Vec::new()
            });
            groups.get_mut(&key).expect("inserted").push(r.loss);
        }
        order
            .into_iter()
            .map(|key| {
                let vals = &groups[&key];
                summarize_group(&key.2, key.0, key.1, key.3, vals)
            })
            .collect()
    }

    pub fn losses(&self, method: &str, n: usize, p: usize, metric: LossMetric) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.method == method && r.n == n && r.p == p && r.metric == metric)
            .map(|r| r.loss)
            .collect()
    }

    pub fn median_loss(&self, method: &str, n: usize, p: usize, metric: LossMetric) -> Option<f64> {
        let v = self.losses(method, n, p, metric);
        (!v.is_empty()).then(|| median(&v))
    }
}

pub const RESULTS_HEADER: &str = "method,n,p,rep,metric,loss";
pub const SUMMARY_HEADER: &str = "method,n,p,metric,reps,mean,std_err,min,q1,median,q3,max";

pub fn write_results<W: Write>(mut w: W, result: &ExperimentResult) -> Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    for r in &result.records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.method,
            r.n,
            r.p,
            r.rep,
            r.metric.name(),
            fmt_num(r.loss)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(mut w: W, rows: &[Summary]) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for s in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            s.method,
            s.n,
            s.p,
            s.metric.name(),
            s.reps,
            fmt_num(s.mean),
            fmt_num(s.std_err),
            fmt_num(s.min),
            fmt_num(s.q1),
            fmt_num(s.median),
            fmt_num(s.q3),
            fmt_num(s.max)
        )?;
    }
    w.flush()?;
    Ok(())
}

fn csv_rows<R: Read>(r: R, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    let mut lines = BufReader::new(r).lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == header => {}
        Some((_, Ok(h))) => {
            return Err(Error::Csv {
                line: 1,
                msg: format!("expected header {header:?}, found {h:?}"),
            })
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => {
            return Err(Error::Csv {
                line: 0,
                msg: "empty file".into(),
            })
        }
    }
    let width = header.split(',').count();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != width {
            return Err(Error::Csv {
                line: idx + 1,
                msg: format!("{} fields, expected {width}", fields.len()),
            });
        }
        out.push((idx + 1, fields));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Csv {
        line,
        msg: format!("cannot parse {s:?}"),
    })
}

fn metric_field(line: usize, s: &str) -> Result<LossMetric> {
    LossMetric::parse(s).map_err(|_| Error::Csv {
        line,
        msg: format!("unknown metric {s:?}"),
    })
}

pub fn read_results<R: Read>(r: R) -> Result<ExperimentResult> {
    let records = csv_rows(r, RESULTS_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(LossRecord {
                method: f[0].clone(),
                n: field(line, &f[1])?,
                p: field(line, &f[2])?,
                rep: field(line, &f[3])?,
                metric: metric_field(line, &f[4])?,
                loss: field(line, &f[5])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult { records })
}

pub fn read_summary<R: Read>(r: R) -> Result<Vec<Summary>> {
    csv_rows(r, SUMMARY_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(Summary {
                method: f[0].clone(),
                n: field(line, &f[1])?,
                p: field(line, &f[2])?,
                metric: metric_field(line, &f[3])?,
                reps: field(line, &f[4])?,
                mean: field(line, &f[5])?,
                std_err: field(line, &f[6])?,
                min: field(line, &f[7])?,
                q1: field(line, &f[8])?,
                median: field(line, &f[9])?,
                q3: field(line, &f[10])?,
                max: field(line, &f[11])?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Empirical checks of the analytical bounds.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub p: usize,
    pub n: usize,
    pub t: f64,
    pub trials: usize,
    pub seed: u64,
    pub k0: Option<usize>,
    pub c0: f64,
}

impl Default for ConcentrationConfig {
    fn default() -> Self {
        ConcentrationConfig {
            p: 50,
            n: 200,
            t: 1.01,
            trials: 500,
            seed: 0,
            k0: None,
            c0: C0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub trials: usize,
    /// Trials in which at least one block broke the bound.
    pub violations: usize,
    /// `p^{-(6t²-2)}`, the probability the bound may fail.
    pub bound: f64,
    /// Largest `‖Σ̄_B - Σ_B‖ / bound_B` seen.
    pub max_ratio: f64,
}

/// Per-block deviations `‖Σ̄_B − Σ_B‖` and their bounds for one trial with `Σ = I`.
fn identity_block_deviations(
    part: &BlockPartition,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(f64, usize)>> {
    let p = part.p();
    let sigma = Matrix::identity(p);
    let data = sample_gaussian_with(&sigma, n, rng)?;
    let diff = sample_covariance(&data)?.sub(&sigma)?;
    part.upper_blocks()
        .map(|b| Ok((spectral_norm(&diff.submatrix_unchecked(b.rows, b.cols))?, b.dim())))
        .collect()
}

/// Checks `‖Σ̄_B − Σ_B‖ < c0 t √(‖Σ_II‖‖Σ_JJ‖) √((d(B) + ln p)/n)` over all
/// blocks at once, with `Σ = I`, in each of `trials` independent samples.
pub fn concentration_suite(cfg: &ConcentrationConfig, jobs: usize) -> Result<ConcentrationReport> {
    if cfg.t.is_nan() || cfg.t <= 1.0 {
        return Err(Error::param(format!("t must exceed 1, got {}", cfg.t)));
    }
    if cfg.n < 2 || cfg.trials == 0 {
        return Err(Error::param("need n >= 2 and at least one trial"));
    }
    let part = match cfg.k0 {
        Some(k0) => BlockPartition::build(cfg.p, k0)?,
        None => BlockPartition::with_default_k0(cfg.p)?,
    };
    let ln_p = (cfg.p as f64).ln();
    let per_trial: Vec<Result<f64>> = with_jobs(jobs, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = stream_rng(cfg.seed, trial as u64);
                let devs = identity_block_deviations(&part, cfg.n, &mut rng)?;
                Ok(devs
                    .into_iter()
                    .map(|(dev, d)| {
                        let bound = cfg.c0 * cfg.t * ((d as f64 + ln_p) / cfg.n as f64).sqrt();
                        dev / bound
                    })
                    .fold(0.0, f64::max))
            })
            .collect()
    })?;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for r in per_trial {
        let r = r?;
        if r >= 1.0 {
            violations += 1;
        }
        max_ratio = max_ratio.max(r);
    }
    Ok(ConcentrationReport {
        trials: cfg.trials,
        violations,
        bound: (cfg.p as f64).powf(-(6.0 * cfg.t * cfg.t - 2.0)),
        max_ratio,
    })
}

/// Median over trials and blocks of `‖Σ̄_B − Σ_B‖` at each sample size, `Σ = I`.
pub fn deviation_medians(p: usize, ns: &[usize], trials: usize, seed: u64, jobs: usize) -> Result<Vec<(usize, f64)>> {
    let part = BlockPartition::with_default_k0(p)?;
    ns.iter()
        .enumerate()
        .map(|(idx, &n)| {
            let devs: Vec<Result<Vec<(f64, usize)>>> = with_jobs(jobs, || {
                (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng = stream_rng(seed, replicate_stream(idx, t));
                        identity_block_deviations(&part, n, &mut rng)
                    })
                    .collect()
            })?;
            let mut all = Vec::new();
            for d in devs {
                all.extend(d?.into_iter().map(|(v, _)| v));
            }
            Ok((n, median(&all)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub trials: usize,
    /// Random cases with `‖A‖ > ‖𝒩(A)‖ + tol`.
    pub violations: usize,
    /// Block-diagonal cases where `‖A‖` and `‖𝒩(A)‖` differ by more than `tol`.
    pub equality_violations: usize,
    pub tol: f64,
}

fn random_composition(p: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut left = p;
    while left > 0 {
        let s = rng.random_range(1..=left);
        sizes.push(s);
        left -= s;
    }
    sizes
}

fn random_symmetric(p: usize, rng: &mut impl Rng) -> Matrix {
    let mut a = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v: f64 = rng.random_range(-1.0..1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Norm compression on random symmetric matrices and random splits, plus
/// the block-diagonal equality case.
pub fn compression_suite(trials: usize, max_p: usize, seed: u64) -> Result<CompressionReport> {
    if max_p < 2 {
        return Err(Error::param("max_p must be >= 2"));
    }
    const TOL: f64 = 1e-10;
    let mut violations = 0;
    let mut equality_violations = 0;
    for trial in 0..trials {
        let mut rng = stream_rng(seed, trial as u64);
        let p = rng.random_range(2..=max_p);
        let sizes = random_composition(p, &mut rng);

        let a = random_symmetric(p, &mut rng);
        let compressed = norm_compression(&a, &sizes)?;
        if spectral_norm(&a)? > spectral_norm(&compressed)? + TOL {
            violations += 1;
        }

        let mut block_diag = Matrix::zeros(p, p);
        let mut start = 0;
        for &s in &sizes {
            let blk = random_symmetric(s, &mut rng);
            block_diag.set_submatrix(start, start, &blk)?;
            start += s;
        }
        let compressed = norm_compression(&block_diag, &sizes)?;
        if (spectral_norm(&block_diag)? - spectral_norm(&compressed)?).abs() > TOL {
            equality_violations += 1;
        }
    }
    Ok(CompressionReport {
        trials,
        violations,
        equality_violations,
        tol: TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockNormReport {
    pub draws: usize,
    pub blocks_checked: usize,
    pub violations: usize,
    /// Largest `‖Σ_B‖ / (M d(B)^{-α})`.
    pub max_ratio: f64,
}

/// Counts blocks with `d(B) ≥ 2 k0` and `‖Σ_B‖ > M d(B)^{-α} + 1e-10`.
pub fn block_norm_violations(sigma: &Matrix, part: &BlockPartition, alpha: f64, m: f64) -> Result<(usize, usize, f64)> {
    if sigma.shape() != (part.p(), part.p()) {
        return Err(Error::dim("covariance does not match the partition"));
    }
    let mut checked = 0;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for b in part.blocks().iter().filter(|b| b.dim() >= 2 * part.k0()) {
        let bound = m * (b.dim() as f64).powf(-alpha);
        let norm = spectral_norm(&sigma.submatrix_unchecked(b.rows, b.cols))?;
        checked += 1;
        if norm > bound + 1e-10 {
            violations += 1;
        }
        max_ratio = max_ratio.max(norm / bound);
    }
    Ok((checked, violations, max_ratio))
}

/// Draws from the first model, certifies each in the bandable class with
/// `α = 1` (taking `M` as the draw's own tail supremum) and scans its blocks.
pub fn model1_block_norm_suite(p: usize, draws: usize, seed: u64) -> Result<BlockNormReport> {
    let alpha = 1.0;
    let part = BlockPartition::with_default_k0(p)?;
    let mut report = BlockNormReport {
        draws,
        blocks_checked: 0,
        violations: 0,
        max_ratio: 0.0,
    };
    for d in 0..draws {
        let mut rng = stream_rng(seed, d as u64);
        let (sigma, _) = model1_with(p, DEFAULT_RHO, &mut rng)?;
        let probe = check_class_membership(&sigma, &ClassParams { alpha, m: 1.0, m0: 1.0 })?;
        let params = ClassParams {
            alpha,
            m: probe.tail_sup.max(f64::MIN_POSITIVE),
            // relative slack so 1/(1/λmin) round-off cannot reject the draw
            m0: probe.lambda_max.max(1.0 / probe.lambda_min).max(1.0) * (1.0 + 1e-12),
        };
        let cert = check_class_membership(&sigma, &params)?;
        if !cert.in_class {
            return Err(Error::param(format!("draw {d} could not be certified in the class")));
        }
        let (checked, violations, ratio) = block_norm_violations(&sigma, &part, alpha, params.m)?;
        report.blocks_checked += checked;
        report.violations += violations;
        report.max_ratio = report.max_ratio.max(ratio);
    }
    Ok(report)
}

/// Runs the exhaustive partition check for all `p ≤ max_p`, `k0 ≤ max_k0`.
pub fn partition_suite(max_p: usize, max_k0: usize) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    for p in 1..=max_p {
        for k0 in 1..=max_k0.min(p) {
            let part = BlockPartition::build(p, k0)?;
            problems.extend(part.verify().into_iter().map(|v| format!("p={p} k0={k0}: {v}")));
        }
    }
    Ok(problems)
}
