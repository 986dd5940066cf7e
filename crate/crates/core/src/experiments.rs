//! Simulation pipelines: sample from a known density, estimate, score the
//! estimate by its exact L2 risk, and aggregate over seeded replications.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::density::{l2_risk, DensityId, TrueDensity};
use crate::dictionary::{Dictionary, DictionaryKind};
use crate::empirical::{moments, EmpiricalStats};
use crate::error::{Error, Result};
use crate::gram::{GramCache, GramMatrix};
use crate::solvers::{
    dantzig_solve, lasso_solve, soft_threshold_estimate, two_step_refit, CoefficientVector, DantzigProblem, Method,
    SolverOptions, SolverReport,
};

pub const DEFAULT_GAMMA: f64 = 1.01;
pub const CURVE_POINTS: usize = 1024;
pub const TOOL_NAME: &str = "dantzig-density";

/// sha256 of a serializable value's JSON form, as lowercase hex.
pub fn digest_of<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub density: DensityId,
    pub dictionary: DictionaryKind,
    pub n: usize,
    pub gamma: f64,
    pub method: Method,
    pub replications: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if self.n < crate::dictionary::MIN_SAMPLE_SIZE {
            return Err(Error::SampleTooSmall(self.n));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        digest_of(self)
    }
}

/// Seed of replication `rep`.
pub fn replication_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

/// Everything shared by the replications of one (density, dictionary, n).
#[derive(Debug, Clone)]
pub struct Setup {
    pub density: TrueDensity,
    pub dict: Dictionary,
    pub gram: Arc<GramMatrix>,
    pub beta0: Vec<f64>,
}

impl Setup {
    pub fn new(density: DensityId, kind: DictionaryKind, n: usize, cache: &GramCache) -> Result<Self> {
        let dict = Dictionary::build(kind, n)?;
        Self::with_dictionary(TrueDensity::new(density), dict, cache)
    }

    pub fn with_dictionary(density: TrueDensity, dict: Dictionary, cache: &GramCache) -> Result<Self> {
        let gram = cache.get(&dict)?;
        let beta0 = density.true_coefficients(&dict)?;
        Ok(Self { density, dict, gram, beta0 })
    }

    pub fn risk(&self, lambda: &[f64]) -> Result<f64> {
        l2_risk(&self.gram, &self.beta0, self.density.l2_norm_sq, lambda)
    }

    /// `|f_0 - P f_0|^2` with `P` the projection on the span of an
    /// orthonormal dictionary.
    pub fn projection_bias_sq(&self) -> f64 {
        (self.density.l2_norm_sq - self.beta0.iter().map(|b| b * b).sum::<f64>()).max(0.0)
    }
}

/// One fitted estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub method: Method,
    pub eta: Vec<f64>,
    pub coefficients: CoefficientVector,
    pub report: SolverReport,
    /// The Dantzig solution that a least-squares refit started from.
    pub dantzig: Option<CoefficientVector>,
    pub refit_condition: Option<f64>,
}

/// Fits `method` from precomputed statistics. The non-adaptive variant needs
/// the sup norm of the true density.
pub fn fit(
    gram: &GramMatrix,
    stats: &EmpiricalStats,
    sup_norms: &[f64],
    method: Method,
    f0_sup: Option<f64>,
    opts: &SolverOptions,
) -> Result<Estimate> {
    let eta = match method {
        Method::DantzigNonAdaptive => {
            let sup = f0_sup.ok_or_else(|| {
                Error::InvalidParameter("the non-adaptive method needs the sup norm of the true density".into())
            })?;
            stats.non_adaptive(sup_norms, sup)
        }
        _ => stats.eta.clone(),
    };
    let problem = DantzigProblem::new(gram, &stats.beta_hat, &eta)?;
    let (coefficients, report, dantzig, refit_condition) = match method {
        Method::Dantzig | Method::DantzigNonAdaptive => {
            let (mut c, r) = dantzig_solve(&problem, opts)?;
            c.method = method;
            (c, r, None, None)
        }
        Method::Lasso => {
            let (c, r) = lasso_solve(&problem, opts)?;
            (c, r, None, None)
        }
        Method::DantzigLs => {
            let (d, r) = dantzig_solve(&problem, opts)?;
            let (c, cond) = two_step_refit(gram, &stats.beta_hat, &d.support)?;
            (c, r, Some(d), Some(cond))
        }
        Method::SoftThreshold => {
            let c = soft_threshold_estimate(&stats.beta_hat, &eta)?;
            let r = SolverReport::closed_form(c.l1_norm, problem.violation(&c.values));
            (c, r, None, None)
        }
    };
    Ok(Estimate { method, eta, coefficients, report, dantzig, refit_condition })
}

/// Per-replication outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub risk: f64,
    pub support_size: usize,
    pub l1_norm: f64,
    pub status: String,
}

impl ReplicationRecord {
    fn from_estimate(replication: usize, seed: u64, est: &Estimate, risk: f64) -> Self {
        Self {
            replication,
            seed,
            risk,
            support_size: est.coefficients.support.len(),
            l1_norm: est.coefficients.l1_norm,
            status: est.report.status.to_string(),
        }
    }

    fn failed(replication: usize, seed: u64, err: &Error) -> Self {
        let status = match err {
            Error::Solver { status, .. } => format!("failed:{status}"),
            Error::IllConditioned(_) => "failed:ill-conditioned".to_string(),
            _ => "failed:error".to_string(),
        };
        Self { replication, seed, risk: f64::NAN, support_size: 0, l1_norm: f64::NAN, status }
    }

    pub fn is_ok(&self) -> bool {
        self.risk.is_finite()
    }
}

/// Five-number summary plus mean and Tukey whiskers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Smallest observation at or above `q1 - 1.5 IQR`.
    pub whisker_low: f64,
    /// Largest observation at or below `q3 + 1.5 IQR`.
    pub whisker_high: f64,
}

/// Linear-interpolation quantile of sorted data (`(n - 1) p` positioning).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl BoxplotStats {
    /// Statistics of the finite values; `None` when there are none.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&v, 0.25);
        let q3 = quantile_sorted(&v, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        Some(Self {
            count: v.len(),
            min: v[0],
            q1,
            median: quantile_sorted(&v, 0.5),
            q3,
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
            whisker_low: v.iter().copied().find(|&x| x >= lo_fence).unwrap_or(v[0]),
            whisker_high: v.iter().rev().copied().find(|&x| x <= hi_fence).unwrap_or(v[v.len() - 1]),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub config_digest: String,
    pub records: Vec<ReplicationRecord>,
    pub summary: Option<BoxplotStats>,
    pub failures: usize,
}

impl RunResult {
    pub fn risks(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.risk).collect()
    }

    pub fn mean_risk(&self) -> f64 {
        self.summary.as_ref().map_or(f64::NAN, |s| s.mean)
    }
}

/// Runs one replication end to end.
pub fn run_replication(
    setup: &Setup,
    method: Method,
    gamma: f64,
    opts: &SolverOptions,
    rep: usize,
    seed: u64,
) -> (ReplicationRecord, Option<Estimate>) {
    let outcome = setup.density.sample(setup.dict.n(), seed).and_then(|sample| {
        let stats = EmpiricalStats::compute(&sample, &setup.dict, gamma)?;
        let est = fit(&setup.gram, &stats, setup.dict.sup_norms(), method, Some(setup.density.sup_norm), opts)?;
        let risk = setup.risk(&est.coefficients.values)?;
        Ok((est, risk))
    });
    match outcome {
        Ok((est, risk)) => (ReplicationRecord::from_estimate(rep, seed, &est, risk), Some(est)),
        Err(e) => (ReplicationRecord::failed(rep, seed, &e), None),
    }
}

/// Replications run in parallel; results are collected in replication order
/// so the output does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig, cache: &GramCache) -> Result<RunResult> {
    config.validate()?;
    let setup = Setup::new(config.density, config.dictionary, config.n, cache)?;
    run_with_setup(config, &setup)
}

pub fn run_with_setup(config: &ExperimentConfig, setup: &Setup) -> Result<RunResult> {
    config.validate()?;
    let records: Vec<ReplicationRecord> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(config.seed, rep);
            run_replication(setup, config.method, config.gamma, &config.solver, rep, seed).0
        })
        .collect();
    let failures = records.iter().filter(|r| !r.is_ok()).count();
    let summary = BoxplotStats::from_values(&records.iter().map(|r| r.risk).collect::<Vec<_>>());
    Ok(RunResult { config: config.clone(), config_digest: config.digest(), records, summary, failures })
}

// ---------------------------------------------------------------------------
// calibration of gamma

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub gamma: f64,
    #[serde(rename = "J")]
    pub j: u32,
    pub n: usize,
    pub mean_risk: f64,
    pub log2_mean_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationTable {
    pub rows: Vec<CalibrationRow>,
    /// `(J, gamma_min(2^J))`
    pub gamma_min: Vec<(u32, f64)>,
}

impl CalibrationTable {
    pub fn mean_risk(&self, j: u32, gamma: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.j == j && r.gamma == gamma).map(|r| r.mean_risk)
    }
}

/// Default grid `0.1, 0.2, ..., 1.5`.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..=15).map(|i| i as f64 / 10.0).collect()
}

/// Seed of replication `rep` at resolution `J` in the calibration study; the
/// resolution goes into the high word so that sample sizes do not share
/// random streams.
pub fn calibration_seed(base: u64, j: u32, rep: usize) -> u64 {
    replication_seed(base, rep).wrapping_add((j as u64) << 32)
}

/// Mean risk of the soft-threshold estimate of the uniform density on the
/// Haar basis with `M = n = 2^J`, for every `gamma` and `J`.
pub fn calibration_sweep(gammas: &[f64], js: &[u32], reps: usize, seed: u64) -> Result<CalibrationTable> {
    if reps == 0 || gammas.is_empty() || js.is_empty() {
        return Err(Error::InvalidParameter("calibration needs gammas, resolutions and reps".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {g}")));
    }
    if let Some(j) = js.iter().find(|&&j| !(2..=24).contains(&j)) {
        return Err(Error::InvalidParameter(format!("resolution J = {j} outside 2..=24")));
    }
    let density = TrueDensity::new(DensityId::Uniform);
    let mut rows = Vec::new();
    let mut gamma_min = Vec::new();
    for &j in js {
        let n = 1usize << j;
        let dict = Dictionary::haar_with_levels(n, j);
        let beta0 = density.true_coefficients(&dict)?;
        let l2 = density.l2_norm_sq;
        let per_rep: Vec<Result<Vec<f64>>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let sample = density.sample(n, calibration_seed(seed, j, rep))?;
                let mo = moments(&sample, &dict);
                gammas
                    .iter()
                    .map(|&g| {
                        let stats = EmpiricalStats::from_moments(mo.clone(), dict.sup_norms(), g);
                        let c = soft_threshold_estimate(&stats.beta_hat, &stats.eta)?;
                        // orthonormal basis: |f_lambda - f_0|^2 = |lambda|^2 - 2 lambda'beta_0 + |f_0|^2
                        let sq: f64 = c.values.iter().map(|v| v * v).sum();
                        let cross: f64 = c.values.iter().zip(&beta0).map(|(a, b)| a * b).sum();
                        Ok((sq - 2.0 * cross + l2).max(0.0))
                    })
                    .collect()
            })
            .collect();
        let per_rep: Vec<Vec<f64>> = per_rep.into_iter().collect::<Result<_>>()?;
        let mut best = (f64::INFINITY, gammas[0]);
        for (gi, &g) in gammas.iter().enumerate() {
            let mean = per_rep.iter().map(|r| r[gi]).sum::<f64>() / reps as f64;
            if mean < best.0 {
                best = (mean, g);
            }
            rows.push(CalibrationRow { gamma: g, j, n, mean_risk: mean, log2_mean_risk: mean.log2() });
        }
        gamma_min.push((j, best.1));
    }
    Ok(CalibrationTable { rows, gamma_min })
}

// ---------------------------------------------------------------------------
// method comparisons

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    DantzigVsLasso,
    AdaptiveVsNonAdaptive,
    DantzigVsDantzigLs,
}

impl Comparison {
    pub const ALL: [Comparison; 3] =
        [Comparison::DantzigVsLasso, Comparison::AdaptiveVsNonAdaptive, Comparison::DantzigVsDantzigLs];

    pub fn name(self) -> &'static str {
        match self {
            Comparison::DantzigVsLasso => "dantzig-vs-lasso",
            Comparison::AdaptiveVsNonAdaptive => "adaptive-vs-non-adaptive",
            Comparison::DantzigVsDantzigLs => "dantzig-vs-dantzig-ls",
        }
    }

    pub fn methods(self) -> [Method; 2] {
        match self {
            Comparison::DantzigVsLasso => [Method::Dantzig, Method::Lasso],
            Comparison::AdaptiveVsNonAdaptive => [Method::Dantzig, Method::DantzigNonAdaptive],
            Comparison::DantzigVsDantzigLs => [Method::Dantzig, Method::DantzigLs],
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Comparison {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Comparison::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown { what: "comparison", name: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub densities: Vec<DensityId>,
    pub dictionaries: Vec<DictionaryKind>,
    pub comparisons: Vec<Comparison>,
    pub n: usize,
    pub gamma: f64,
    pub replications: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl BenchmarkConfig {
    /// The full grid: four mixtures, six dictionaries, three comparisons.
    pub fn full(n: usize, replications: usize, seed: u64) -> Self {
        Self {
            densities: DensityId::BENCHMARK.to_vec(),
            dictionaries: DictionaryKind::ALL.to_vec(),
            comparisons: Comparison::ALL.to_vec(),
            n,
            gamma: DEFAULT_GAMMA,
            replications,
            seed,
            solver: SolverOptions::default(),
        }
    }

    fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = self.comparisons.iter().flat_map(|c| c.methods()).collect();
        m.sort_by_key(|x| Method::ALL.iter().position(|y| y == x));
        m.dedup();
        m
    }
}

/// Results of one (density, dictionary, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkCell {
    pub density: DensityId,
    pub dictionary: DictionaryKind,
    pub method: Method,
    pub records: Vec<ReplicationRecord>,
    pub summary: Option<BoxplotStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkResult {
    pub config: BenchmarkConfig,
    pub cells: Vec<BenchmarkCell>,
}

impl BenchmarkResult {
    pub fn cell(&self, density: DensityId, dictionary: DictionaryKind, method: Method) -> Option<&BenchmarkCell> {
        self.cells.iter().find(|c| c.density == density && c.dictionary == dictionary && c.method == method)
    }

    pub fn mean_risk(&self, density: DensityId, dictionary: DictionaryKind, method: Method) -> f64 {
        self.cell(density, dictionary, method).and_then(|c| c.summary.as_ref()).map_or(f64::NAN, |s| s.mean)
    }
}

/// Runs every method the comparisons need on shared samples: each
/// replication draws one sample and fits all methods to it.
pub fn run_benchmark(config: &BenchmarkConfig, cache: &GramCache) -> Result<BenchmarkResult> {
    if !(config.gamma > 0.0 && config.gamma.is_finite()) || config.replications == 0 {
        return Err(Error::InvalidParameter("benchmark needs gamma > 0 and at least one replication".into()));
    }
    let methods = config.methods();
    let mut cells = Vec::new();
    for &density in &config.densities {
        for &kind in &config.dictionaries {
            let setup = Setup::new(density, kind, config.n, cache)?;
            let per_rep: Vec<Vec<ReplicationRecord>> = (0..config.replications)
                .into_par_iter()
                .map(|rep| {
                    let seed = replication_seed(config.seed, rep);
                    fit_all(&setup, &methods, config.gamma, &config.solver, rep, seed)
                })
                .collect();
            for (mi, &method) in methods.iter().enumerate() {
                let records: Vec<ReplicationRecord> = per_rep.iter().map(|r| r[mi].clone()).collect();
                let summary = BoxplotStats::from_values(&records.iter().map(|r| r.risk).collect::<Vec<_>>());
                cells.push(BenchmarkCell { density, dictionary: kind, method, records, summary });
            }
        }
    }
    Ok(BenchmarkResult { config: config.clone(), cells })
}

fn fit_all(
    setup: &Setup,
    methods: &[Method],
    gamma: f64,
    opts: &SolverOptions,
    rep: usize,
    seed: u64,
) -> Vec<ReplicationRecord> {
    let prepared =
        setup.density.sample(setup.dict.n(), seed).and_then(|s| EmpiricalStats::compute(&s, &setup.dict, gamma));
    let stats = match prepared {
        Ok(s) => s,
        Err(e) => return methods.iter().map(|_| ReplicationRecord::failed(rep, seed, &e)).collect(),
    };
    let mut dantzig_cache: Option<Estimate> = None;
    methods
        .iter()
        .map(|&method| {
            let result = match (method, &dantzig_cache) {
                // the refit starts from the Dantzig support already computed
                (Method::DantzigLs, Some(d)) => two_step_refit(&setup.gram, &stats.beta_hat, &d.coefficients.support)
                    .map(|(c, cond)| Estimate {
                        method,
                        eta: d.eta.clone(),
                        coefficients: c,
                        report: d.report.clone(),
                        dantzig: Some(d.coefficients.clone()),
                        refit_condition: Some(cond),
                    }),
                _ => fit(&setup.gram, &stats, setup.dict.sup_norms(), method, Some(setup.density.sup_norm), opts),
            };
            match result.and_then(|est| setup.risk(&est.coefficients.values).map(|r| (est, r))) {
                Ok((est, risk)) => {
                    let rec = ReplicationRecord::from_estimate(rep, seed, &est, risk);
                    if method == Method::Dantzig {
                        dantzig_cache = Some(est);
                    }
                    rec
                }
                Err(e) => ReplicationRecord::failed(rep, seed, &e),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// output

/// Comment lines written above every CSV table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputHeader {
    pub version: String,
    pub config_digest: String,
}

impl OutputHeader {
    pub fn new(config_digest: impl Into<String>) -> Self {
        Self { version: env!("CARGO_PKG_VERSION").to_string(), config_digest: config_digest.into() }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# {TOOL_NAME} {}", self.version)?;
        writeln!(w, "# config_digest {}", self.config_digest)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidParameter(format!("csv: {other:?}")),
    }
}

fn write_table<W: Write, R: Serialize>(w: &mut W, header: &OutputHeader, rows: &[R]) -> Result<()> {
    header.write_to(w)?;
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ReplicationCsvRow<'a> {
    config_digest: &'a str,
    density: DensityId,
    dictionary: DictionaryKind,
    method: Method,
    replication: usize,
    seed: u64,
    risk: f64,
    support_size: usize,
    l1_norm: f64,
    status: &'a str,
}

/// One row per replication.
pub fn write_replications_csv<W: Write>(w: &mut W, header: &OutputHeader, result: &RunResult) -> Result<()> {
    let rows: Vec<ReplicationCsvRow> = result
        .records
        .iter()
        .map(|r| ReplicationCsvRow {
            config_digest: &result.config_digest,
            density: result.config.density,
            dictionary: result.config.dictionary,
            method: result.config.method,
            replication: r.replication,
            seed: r.seed,
            risk: r.risk,
            support_size: r.support_size,
            l1_norm: r.l1_norm,
            status: &r.status,
        })
        .collect();
    write_table(w, header, &rows)
}

pub fn write_calibration_csv<W: Write>(w: &mut W, header: &OutputHeader, table: &CalibrationTable) -> Result<()> {
    write_table(w, header, &table.rows)
}

#[derive(Serialize)]
struct PanelRow<'a> {
    config_digest: &'a str,
    comparison: &'a str,
    density: DensityId,
    dictionary: DictionaryKind,
    method: Method,
    replication: usize,
    seed: u64,
    risk: f64,
    support_size: usize,
    l1_norm: f64,
    status: &'a str,
}

/// Per-replication risks of the two methods of one comparison.
pub fn write_panel_csv<W: Write>(
    w: &mut W,
    header: &OutputHeader,
    result: &BenchmarkResult,
    comparison: Comparison,
) -> Result<()> {
    let methods = comparison.methods();
    let digest = digest_of(&result.config);
    let mut rows = Vec::new();
    for cell in result.cells.iter().filter(|c| methods.contains(&c.method)) {
        for r in &cell.records {
            rows.push(PanelRow {
                config_digest: &digest,
                comparison: comparison.name(),
                density: cell.density,
                dictionary: cell.dictionary,
                method: cell.method,
                replication: r.replication,
                seed: r.seed,
                risk: r.risk,
                support_size: r.support_size,
                l1_norm: r.l1_norm,
                status: &r.status,
            });
        }
    }
    write_table(w, header, &rows)
}

#[derive(Serialize)]
struct SummaryRow {
    comparison: String,
    density: DensityId,
    dictionary: DictionaryKind,
    method: Method,
    count: usize,
    failures: usize,
    min: f64,
    q1: f64,
    median: f64,
    q3: f64,
    max: f64,
    mean: f64,
    whisker_low: f64,
    whisker_high: f64,
}

/// Boxplot statistics for every (comparison, density, dictionary, method).
pub fn write_boxplot_summary_csv<W: Write>(w: &mut W, header: &OutputHeader, result: &BenchmarkResult) -> Result<()> {
    let mut rows = Vec::new();
    for &comparison in &result.config.comparisons {
        let methods = comparison.methods();
        for cell in result.cells.iter().filter(|c| methods.contains(&c.method)) {
            let failures = cell.records.iter().filter(|r| !r.is_ok()).count();
            let s = cell.summary.clone().unwrap_or(BoxplotStats {
                count: 0,
                min: f64::NAN,
                q1: f64::NAN,
                median: f64::NAN,
                q3: f64::NAN,
                max: f64::NAN,
                mean: f64::NAN,
                whisker_low: f64::NAN,
                whisker_high: f64::NAN,
            });
            rows.push(SummaryRow {
                comparison: comparison.name().to_string(),
                density: cell.density,
                dictionary: cell.dictionary,
                method: cell.method,
                count: s.count,
                failures,
                min: s.min,
                q1: s.q1,
                median: s.median,
                q3: s.q3,
                max: s.max,
                mean: s.mean,
                whisker_low: s.whisker_low,
                whisker_high: s.whisker_high,
            });
        }
    }
    write_table(w, header, &rows)
}

/// Evaluation grid `i / (CURVE_POINTS - 1)`.
pub fn curve_grid() -> Vec<f64> {
    (0..CURVE_POINTS).map(|i| i as f64 / (CURVE_POINTS - 1) as f64).collect()
}

/// `x, f0, f_hat[, f_hat_ls]` on the curve grid.
pub fn write_curve_csv<W: Write>(
    w: &mut W,
    header: &OutputHeader,
    setup: &Setup,
    estimate: &[f64],
    refit: Option<&[f64]>,
) -> Result<()> {
    let xs = curve_grid();
    let fhat = setup.dict.synthesize(estimate, &xs)?;
    let fls = refit.map(|r| setup.dict.synthesize(r, &xs)).transpose()?;
    header.write_to(w)?;
    let mut out = csv::Writer::from_writer(w);
    let mut cols = vec!["x", "f0", "f_hat"];
    if fls.is_some() {
        cols.push("f_hat_ls");
    }
    out.write_record(&cols).map_err(csv_error)?;
    for (i, &x) in xs.iter().enumerate() {
        let mut rec = vec![x.to_string(), setup.density.pdf(x).to_string(), fhat[i].to_string()];
        if let Some(l) = &fls {
            rec.push(l[i].to_string());
        }
        out.write_record(&rec).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Mean risks per (density, dictionary, method), keyed for JSON output.
pub fn benchmark_means(result: &BenchmarkResult) -> BTreeMap<String, f64> {
    result
        .cells
        .iter()
        .map(|c| {
            (format!("{}/{}/{}", c.density, c.dictionary, c.method), c.summary.as_ref().map_or(f64::NAN, |s| s.mean))
        })
        .collect()
}
