use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use dantzig_density::analysis::{structural_report, SUBSET_BUDGET};
use dantzig_density::experiments::{
    self, calibration_sweep, default_gamma_grid, digest_of, replication_seed, run_benchmark, run_with_setup,
    BenchmarkConfig, OutputHeader, TOOL_NAME,
};
use dantzig_density::{
    DensityId, Dictionary, DictionaryKind, EmpiricalStats, Error, ExperimentConfig, GramCache, GramMatrix, Method,
    Setup, SolverOptions,
};

use crate::config::FileConfig;
use crate::{AnalyzeArgs, BenchmarkArgs, CalibrateArgs, EstimateArgs, GramArgs};

pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(std::io::Error),
}

impl CliError {
    /// 2 for configuration errors, 3 for solver failures, 4 when a
    /// combinatorial budget is exceeded, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                Error::Solver { .. } | Error::IllConditioned(_) => 3,
                Error::BudgetExceeded { .. } => 4,
                Error::Io(_) | Error::Cache(_) | Error::Quadrature(_) | Error::QuadraturePair(..) => 1,
                _ => 2,
            },
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub struct Context {
    pub out_dir: PathBuf,
    pub cache: GramCache,
    pub file: FileConfig,
}

impl Context {
    pub fn new(
        out_dir: &Option<PathBuf>,
        cache_dir: &Option<PathBuf>,
        threads: Option<usize>,
        file: FileConfig,
    ) -> Result<Self, CliError> {
        if let Some(k) = threads.or(file.threads) {
            if k == 0 {
                return Err(CliError::Config("--threads must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))?;
        }
        let out_dir = out_dir.clone().or_else(|| file.out_dir.clone()).unwrap_or_else(|| DEFAULT_OUT_DIR.into());
        let cache = match cache_dir.clone().or_else(|| file.cache_dir.clone()) {
            Some(dir) => GramCache::with_dir(dir),
            None => GramCache::in_memory(),
        };
        Ok(Self { out_dir, cache, file })
    }

    fn solver(&self) -> SolverOptions {
        self.file.solver.clone().unwrap_or_default()
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        info!("writing {}", path.display());
        Ok(BufWriter::new(File::create(path)?))
    }

    fn write_json(&self, name: &str, digest: &str, body: Value) -> Result<(), CliError> {
        let mut doc = json!({
            "tool": TOOL_NAME,
            "version": env!("CARGO_PKG_VERSION"),
            "config_digest": digest,
        });
        if let (Value::Object(head), Value::Object(rest)) = (&mut doc, body) {
            head.extend(rest);
        }
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| CliError::Io(e.into()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

fn header(digest: &str) -> OutputHeader {
    OutputHeader::new(digest)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

pub fn estimate(ctx: &Context, a: &EstimateArgs) -> Result<(), CliError> {
    let f = &ctx.file.experiment;
    let config = ExperimentConfig {
        density: a.density.or(f.density).unwrap_or(DensityId::F3),
        dictionary: a.dict.or(f.dictionary).unwrap_or(DictionaryKind::Mix2),
        n: a.n.or(f.n).unwrap_or(500),
        gamma: a.gamma.or(f.gamma).unwrap_or(experiments::DEFAULT_GAMMA),
        method: a.method.or(f.method).unwrap_or(Method::Dantzig),
        replications: a.reps.or(f.replications).unwrap_or(1),
        seed: a.seed.or(f.seed).unwrap_or(1),
        solver: ctx.solver(),
    };
    config.validate()?;
    let digest = config.digest();
    let setup = Setup::new(config.density, config.dictionary, config.n, &ctx.cache)?;

    let seed = replication_seed(config.seed, 0);
    let sample = setup.density.sample(config.n, seed)?;
    let stats = EmpiricalStats::compute(&sample, &setup.dict, config.gamma)?;
    let est = experiments::fit(
        &setup.gram,
        &stats,
        setup.dict.sup_norms(),
        config.method,
        Some(setup.density.sup_norm),
        &config.solver,
    )?;
    let risk = setup.risk(&est.coefficients.values)?;
    let dantzig_risk = est.dantzig.as_ref().map(|d| setup.risk(&d.values)).transpose()?;

    ctx.write_json(
        "coefficients.json",
        &digest,
        json!({
            "config": to_value(&config),
            "seed": seed,
            "members": setup.dict.members().iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "eta": est.eta,
            "coefficients": to_value(&est.coefficients),
            "dantzig": to_value(&est.dantzig),
        }),
    )?;

    let mut w = ctx.create("curve.csv")?;
    match &est.dantzig {
        Some(d) => {
            experiments::write_curve_csv(&mut w, &header(&digest), &setup, &d.values, Some(&est.coefficients.values))?
        }
        None => experiments::write_curve_csv(&mut w, &header(&digest), &setup, &est.coefficients.values, None)?,
    }
    w.flush()?;

    let run = run_with_setup(&config, &setup)?;
    let mut w = ctx.create("replications.csv")?;
    experiments::write_replications_csv(&mut w, &header(&digest), &run)?;
    w.flush()?;

    ctx.write_json(
        "report.json",
        &digest,
        json!({
            "config": to_value(&config),
            "seed": seed,
            "dictionary_size": setup.dict.len(),
            "solver_report": to_value(&est.report),
            "risk": risk,
            "dantzig_risk": dantzig_risk,
            "refit_condition": est.refit_condition,
            "support_size": est.coefficients.support.len(),
            "l1_norm": est.coefficients.l1_norm,
            "replications": {
                "count": run.records.len(),
                "failures": run.failures,
                "summary": to_value(&run.summary),
            },
        }),
    )?;
    match dantzig_risk {
        Some(d) => println!(
            "{} M={} risk={risk:.6e} dantzig_risk={d:.6e} support={}",
            config.method,
            setup.dict.len(),
            est.coefficients.support.len()
        ),
        None => println!(
            "{} M={} risk={risk:.6e} support={}",
            config.method,
            setup.dict.len(),
            est.coefficients.support.len()
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct CalibrationConfig<'a> {
    gammas: &'a [f64],
    resolutions: &'a [u32],
    replications: usize,
    seed: u64,
}

pub fn calibrate(ctx: &Context, a: &CalibrateArgs) -> Result<(), CliError> {
    let f = &ctx.file.calibration;
    let gammas = a.gammas.clone().or_else(|| f.gammas.clone()).unwrap_or_else(default_gamma_grid);
    let js = a.resolutions.clone().or_else(|| f.resolutions.clone()).unwrap_or_else(|| (4..=10).collect());
    let reps = a.reps.or(f.replications).unwrap_or(20);
    let seed = a.seed.or(f.seed).unwrap_or(1);
    let cfg = CalibrationConfig { gammas: &gammas, resolutions: &js, replications: reps, seed };
    let digest = digest_of(&cfg);
    let table = calibration_sweep(&gammas, &js, reps, seed)?;

    let mut w = ctx.create("calibration.csv")?;
    experiments::write_calibration_csv(&mut w, &header(&digest), &table)?;
    w.flush()?;
    let gamma_min: Vec<Value> =
        table.gamma_min.iter().map(|&(j, g)| json!({ "J": j, "n": 1u64 << j, "gamma_min": g })).collect();
    ctx.write_json("calibration.json", &digest, json!({ "config": to_value(&cfg), "gamma_min": gamma_min }))?;
    for &(j, g) in &table.gamma_min {
        println!("J={j:<3} n={:<6} gamma_min={g}", 1u64 << j);
    }
    Ok(())
}

pub fn benchmark(ctx: &Context, a: &BenchmarkArgs) -> Result<(), CliError> {
    let f = &ctx.file.benchmark;
    let mut cfg = BenchmarkConfig::full(
        a.n.or(f.n).unwrap_or(500),
        a.reps.or(f.replications).unwrap_or(100),
        a.seed.or(f.seed).unwrap_or(1),
    );
    if let Some(d) = a.densities.clone().or_else(|| f.densities.clone()) {
        cfg.densities = d;
    }
    if let Some(d) = a.dictionaries.clone().or_else(|| f.dictionaries.clone()) {
        cfg.dictionaries = d;
    }
    if let Some(c) = a.comparisons.clone().or_else(|| f.comparisons.clone()) {
        cfg.comparisons = c;
    }
    cfg.gamma = a.gamma.or(f.gamma).unwrap_or(cfg.gamma);
    cfg.solver = ctx.solver();
    if cfg.densities.is_empty() || cfg.dictionaries.is_empty() || cfg.comparisons.is_empty() {
        return Err(CliError::Config("benchmark needs at least one density, dictionary and comparison".into()));
    }
    if cfg.n < dantzig_density::dictionary::MIN_SAMPLE_SIZE {
        return Err(Error::SampleTooSmall(cfg.n).into());
    }
    let digest = digest_of(&cfg);
    let result = run_benchmark(&cfg, &ctx.cache)?;

    for &c in &cfg.comparisons {
        let mut w = ctx.create(&format!("panel_{}.csv", c.name()))?;
        experiments::write_panel_csv(&mut w, &header(&digest), &result, c)?;
        w.flush()?;
    }
    let mut w = ctx.create("boxplot_summary.csv")?;
    experiments::write_boxplot_summary_csv(&mut w, &header(&digest), &result)?;
    w.flush()?;

    let failures: usize = result.cells.iter().map(|c| c.records.iter().filter(|r| !r.is_ok()).count()).sum();
    ctx.write_json(
        "benchmark.json",
        &digest,
        json!({
            "config": to_value(&cfg),
            "mean_risk": to_value(&experiments::benchmark_means(&result)),
            "failures": failures,
        }),
    )?;
    for cell in &result.cells {
        let mean = cell.summary.as_ref().map_or(f64::NAN, |s| s.mean);
        println!("{:<4} {:<5} {:<22} mean_risk={mean:.6e}", cell.density, cell.dictionary, cell.method);
    }
    if failures > 0 {
        eprintln!("warning: {failures} fits failed; see the status column");
    }
    Ok(())
}

/// Reads a Gram matrix stored as a JSON array of rows, or as an object with
/// a `gram` field holding one.
fn load_gram(path: &Path) -> Result<GramMatrix, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid JSON in {}: {e}", path.display())))?;
    let rows = match &v {
        Value::Object(o) => o.get("gram").cloned().unwrap_or(Value::Null),
        other => other.clone(),
    };
    let rows: Vec<Vec<f64>> = serde_json::from_value(rows)
        .map_err(|_| CliError::Config(format!("{} must hold a square array of rows", path.display())))?;
    let m = rows.len();
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Config(format!("{} must hold a square array of rows", path.display())));
    }
    let g = GramMatrix::new(m, rows.into_iter().flatten().collect())?;
    if g.symmetry_deviation() > 1e-9 {
        return Err(CliError::Config("Gram matrix is not symmetric".into()));
    }
    Ok(g)
}

pub fn analyze(ctx: &Context, a: &AnalyzeArgs) -> Result<(), CliError> {
    let f = &ctx.file.analysis;
    let n = a.n.or(f.n).unwrap_or(64);
    let (source, gram) = match a.dict.parse::<DictionaryKind>() {
        Ok(kind) => {
            let dict = Dictionary::build(kind, n)?;
            (json!({ "dictionary": kind, "n": n }), (*ctx.cache.get(&dict)?).clone())
        }
        Err(_) => {
            let path = PathBuf::from(&a.dict);
            if !path.exists() {
                return Err(CliError::Config(format!("'{}' is neither a dictionary name nor a file", a.dict)));
            }
            (json!({ "gram_file": path.display().to_string() }), load_gram(&path)?)
        }
    };
    let s = a.s.or(f.s).unwrap_or(1);
    let l = a.l.or(f.l).unwrap_or(s);
    let budget = a.budget.or(f.budget).unwrap_or(SUBSET_BUDGET);
    if s == 0 || l < s || 2 * s > gram.dim() || s + l > gram.dim() {
        return Err(CliError::Config(format!(
            "need 1 <= s <= l with 2s <= M and s + l <= M (s = {s}, l = {l}, M = {})",
            gram.dim()
        )));
    }
    let digest = digest_of(&json!({ "source": source, "s": s, "l": l, "budget": budget.to_string() }));
    let report = structural_report(&gram, s, l.max(2 * s).min(gram.dim()), budget)?;
    ctx.write_json("analysis.json", &digest, json!({ "source": source, "report": to_value(&report) }))?;
    println!("M={}", report.dim);
    println!(
        "{:>3} {:>3} {:>3} {:>12} {:>12} {:>3} {:>12} {:>12}",
        "s", "l", "A1", "kappa1", "mu1", "A2", "kappa2", "mu2"
    );
    for c in report.checks.iter().filter(|c| c.l <= l) {
        println!(
            "{:>3} {:>3} {:>3} {:>12.6} {:>12.6} {:>3} {:>12.6} {:>12.6}",
            c.s,
            c.l,
            if c.assumption1 { "yes" } else { "no" },
            c.kappa1,
            c.mu1,
            if c.assumption2 { "yes" } else { "no" },
            c.kappa2,
            c.mu2
        );
    }
    Ok(())
}

pub fn gram(ctx: &Context, a: &GramArgs) -> Result<(), CliError> {
    let dict = Dictionary::build(a.dict, a.n)?;
    let g = ctx.cache.get(&dict)?;
    let m = g.dim();
    let mut max_off = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                max_off = max_off.max(g.get(i, j).abs());
            }
        }
    }
    let summary = json!({
        "dictionary": a.dict,
        "n": a.n,
        "dim": m,
        "min_eigenvalue": g.min_eigenvalue(),
        "max_off_diagonal": max_off,
        "identity_deviation": g.identity_deviation(),
        "symmetry_deviation": g.symmetry_deviation(),
    });
    let digest = digest_of(&json!({ "dictionary": a.dict, "n": a.n }));
    ctx.write_json("gram.json", &digest, summary.clone())?;
    println!("dictionary={} n={} M={m}", a.dict, a.n);
    println!("min_eigenvalue={:.6e}", summary["min_eigenvalue"].as_f64().unwrap_or(f64::NAN));
    println!("max_off_diagonal={max_off:.6e}");
    println!("identity_deviation={:.6e}", g.identity_deviation());
    Ok(())
}
