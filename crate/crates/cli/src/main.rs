use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dantzig_density::experiments::Comparison;
use dantzig_density::{DensityId, DictionaryKind, Method};

mod commands;
mod config;

use commands::CliError;

/// Sparse density estimation on [0, 1] with adaptive Dantzig constraints.
#[derive(Debug, Parser)]
#[command(name = "dantzig-density", version, about)]
struct Cli {
    /// TOML manifest supplying defaults; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for output files.
    #[arg(long, global = true, env = "DANTZIG_DENSITY_OUT_DIR")]
    out_dir: Option<PathBuf>,

    /// Directory for persistent Gram matrix files.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one estimate and write coefficients, curve and report.
    Estimate(EstimateArgs),
    /// Mean soft-threshold risk of the uniform density over a gamma grid.
    Calibrate(CalibrateArgs),
    /// Method comparisons over densities and dictionaries.
    Benchmark(BenchmarkArgs),
    /// Restricted eigenvalues, correlations and assumption checks of a Gram matrix.
    Analyze(AnalyzeArgs),
    /// Summary of a dictionary's Gram matrix.
    Gram(GramArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub density: Option<DensityId>,
    #[arg(long)]
    pub dict: Option<DictionaryKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub method: Option<Method>,
    /// Replications written to replications.csv (the first one is the fitted estimate).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Comma-separated gamma grid (default 0.1, 0.2, ..., 1.5).
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// Comma-separated resolutions J, with n = M = 2^J (default 4..10).
    #[arg(long = "resolutions", value_delimiter = ',')]
    pub resolutions: Option<Vec<u32>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',')]
    pub densities: Option<Vec<DensityId>>,
    #[arg(long = "dicts", value_delimiter = ',')]
    pub dictionaries: Option<Vec<DictionaryKind>>,
    #[arg(long, value_delimiter = ',')]
    pub comparisons: Option<Vec<Comparison>>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Dictionary name, or a JSON file holding a Gram matrix as an array of rows.
    #[arg(long)]
    pub dict: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    /// Maximum number of subsets enumerated per quantity.
    #[arg(long)]
    pub budget: Option<u128>,
}

#[derive(Debug, Args)]
pub struct GramArgs {
    #[arg(long)]
    pub dict: DictionaryKind,
    #[arg(long)]
    pub n: usize,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => config::FileConfig::load(path).map_err(CliError::Config)?,
        None => config::FileConfig::default(),
    };
    let ctx = commands::Context::new(&cli.out_dir, &cli.cache_dir, cli.threads, file)?;
    match cli.command {
        Command::Estimate(a) => commands::estimate(&ctx, &a),
        Command::Calibrate(a) => commands::calibrate(&ctx, &a),
        Command::Benchmark(a) => commands::benchmark(&ctx, &a),
        Command::Analyze(a) => commands::analyze(&ctx, &a),
        Command::Gram(a) => commands::gram(&ctx, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
