use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "charcoal", version, about = "Changepoint estimation for high-dimensional linear regression")]
pub struct Cli {
    /// Worker threads for replicate-level parallelism.
    #[arg(long, global = true, env = "CHARCOAL_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate changepoints in a data CSV (header x1,...,xp,y).
    Detect(DetectArgs),
    /// Generate a synthetic data CSV and its truth sidecar.
    Simulate(SimulateArgs),
    /// Calibrate the rejection threshold by Monte-Carlo.
    Calibrate(CalibrateArgs),
    /// Run a named benchmark suite.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectArgs {
    /// Input data CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Single-change estimator: proj, proj-primed, soft, hard or lasso-bic.
    #[arg(long, default_value = "proj")]
    pub method: String,
    /// Threshold coefficient c in lambda = c * sigma * ln p.
    #[arg(long, default_value_t = 0.5)]
    pub lambda_c: f64,
    /// Burn-in fraction (default 0 for a single change, 0.05 with --multi).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Segment into multiple changes.
    #[arg(long)]
    pub multi: bool,
    /// Number of random intervals M.
    #[arg(long, default_value_t = 200)]
    pub intervals: usize,
    /// Calibration level (default 0.01 / M).
    #[arg(long)]
    pub level: Option<f64>,
    /// Rejection threshold; calibrated from null data when absent.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Null replicates used when calibrating.
    #[arg(long, default_value_t = 1000)]
    pub calibration_b: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report JSON (stdout when absent).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Statistic trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// SVG line chart of the trace.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 600)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub p: usize,
    /// Sparsity of each coefficient change.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// l2 norm of the (half) coefficient change.
    #[arg(long, default_value_t = 4.0)]
    pub rho: f64,
    /// Changepoint as a fraction of n.
    #[arg(long, default_value_t = 0.3)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// gauss-iid, ar-toeplitz or rademacher.
    #[arg(long, default_value = "gauss-iid")]
    pub design: String,
    /// gauss, t4, t6, exp-centered or rademacher.
    #[arg(long, default_value = "gauss")]
    pub noise: String,
    /// Multiple-change layout M1 or M2 (overrides n, p, rho and tau).
    #[arg(long)]
    pub preset: Option<String>,
    /// Smallest change magnitude of a preset layout.
    #[arg(long, default_value_t = 1.6)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Data CSV.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Truth JSON (defaults to the output path with a .truth.json suffix).
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// Null replicates.
    #[arg(long, default_value_t = 1000)]
    pub b: usize,
    /// Number of intervals M the threshold is shared across.
    #[arg(long, default_value_t = 200)]
    pub intervals: usize,
    /// Upper-tail level (default 0.01 / M).
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda_c: f64,
    /// Standardise by the true unit noise level instead of the MAD estimate.
    #[arg(long)]
    pub known_sigma: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Threshold JSON (stdout when absent).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchmarkArgs {
    /// Suite name.
    #[arg(long)]
    pub preset: String,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep only scenarios whose name contains this string.
    #[arg(long)]
    pub filter: Option<String>,
    /// Omit wall-clock times so that output is reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
    /// Per-replicate CSV.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Aggregate JSON (stdout when absent).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}
