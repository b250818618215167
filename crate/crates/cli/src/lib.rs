//! Front end for the `charcoal` estimators: file formats and subcommands.

pub mod args;
pub mod io;
pub mod plot;

use std::fmt;
use std::path::{Path, PathBuf};

use charcoal::multi::{detect_multiple, MultiConfig};
use charcoal::rng::derive_seed;
use charcoal::simulate::{
    generate_multi, generate_single, preset, run_benchmark, Design, MultiSpec, Noise, SimConfig, PRESETS,
};
use charcoal::single::{calibrate_threshold, CalibrationConfig, GevParams, Method};
use serde::Serialize;

use args::{BenchmarkArgs, CalibrateArgs, Cli, Command, DetectArgs, SimulateArgs};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(m) => write!(f, "data: {m}"),
            CliError::Numeric(m) => write!(f, "numeric: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<charcoal::Error> for CliError {
    fn from(e: charcoal::Error) -> Self {
        use charcoal::Error as E;
        match e {
            E::Config(_) => CliError::Usage(e.to_string()),
            E::Dimension(_) | E::RankDeficient { .. } | E::NonFinite { .. } => CliError::Data(e.to_string()),
            E::Degenerate(_) | E::NonConvergence { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    }
}

#[derive(Debug, Serialize)]
pub struct Stages {
    pub raw: Vec<usize>,
    pub pruned: Vec<usize>,
    pub refined: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct DetectReport {
    pub mode: &'static str,
    pub changepoints: Vec<usize>,
    pub h_max: Option<f64>,
    pub sigma_tilde: Option<f64>,
    pub lambda: Option<f64>,
    pub threshold_t: Option<f64>,
    pub config: DetectArgs,
    pub stages: Option<Stages>,
    pub trace: Option<PathBuf>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn write_trace_files(args: &DetectArgs, title: &str, t_lo: usize, trace: &[f64], marks: &[usize]) -> Result<(), CliError> {
    if let Some(path) = &args.trace {
        io::write_trace(path, t_lo, trace)?;
    }
    if let Some(path) = &args.plot {
        std::fs::write(path, plot::line_chart(title, t_lo, trace, marks))
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn cmd_detect(mut args: DetectArgs) -> Result<(), CliError> {
    let method = Method::parse(&args.method).ok_or_else(|| {
        let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        CliError::Usage(format!("unknown method {:?}; expected one of {}", args.method, names.join(", ")))
    })?;
    let alpha = *args.alpha.get_or_insert(if args.multi { 0.05 } else { 0.0 });
    let data = io::read_data(&args.input)?;
    if !data.sketchable() {
        return Err(CliError::Data(format!(
            "the sketch needs more time points than covariates (n = {}, p = {})",
            data.n(),
            data.p()
        )));
    }

    let report = if args.multi {
        let level = *args.level.get_or_insert(0.01 / args.intervals.max(1) as f64);
        let threshold = match args.threshold {
            Some(t) => t,
            None => {
                let cal = CalibrationConfig {
                    alpha,
                    lam_coef: args.lambda_c,
                    b: args.calibration_b,
                    intervals: args.intervals,
                    level: Some(level),
                    ..CalibrationConfig::new(data.n(), data.p(), derive_seed(args.seed, 2))
                };
                calibrate_threshold(&cal)?.threshold
            }
        };
        let cfg = MultiConfig {
            intervals: args.intervals,
            alpha,
            lam_coef: args.lambda_c,
            threshold: Some(threshold),
            level: Some(level),
            seed: args.seed,
            ..MultiConfig::default()
        };
        let result = detect_multiple(&data, &cfg)?;
        let scan = Method::Proj.run(&data, alpha, args.lambda_c, args.seed)?;
        let est = &scan.estimate;
        write_trace_files(&args, "projection statistic", est.t_lo, &est.trace, &result.refined)?;
        DetectReport {
            mode: "multi",
            changepoints: result.refined.clone(),
            h_max: finite(est.h_max),
            sigma_tilde: finite(scan.sigma_tilde),
            lambda: finite(scan.lambda),
            threshold_t: Some(threshold),
            config: args.clone(),
            stages: Some(Stages {
                raw: result.raw,
                pruned: result.pruned,
                refined: result.refined,
            }),
            trace: args.trace.clone(),
        }
    } else {
        let scan = method.run(&data, alpha, args.lambda_c, args.seed)?;
        let est = &scan.estimate;
        let title = if method == Method::LassoBic { "BIC score" } else { "scan statistic" };
        write_trace_files(&args, title, est.t_lo, &est.trace, &[est.location])?;
        DetectReport {
            mode: "single",
            changepoints: vec![est.location],
            h_max: (method != Method::LassoBic).then_some(est.h_max),
            sigma_tilde: finite(scan.sigma_tilde),
            lambda: finite(scan.lambda),
            threshold_t: None,
            config: args.clone(),
            stages: None,
            trace: args.trace.clone(),
        }
    };
    io::write_json(args.output.as_deref(), &report)
}

#[derive(Debug, Serialize)]
pub struct Truth {
    pub n: usize,
    pub p: usize,
    pub changepoints: Vec<usize>,
    pub theta_norms: Vec<f64>,
    pub seed: u64,
    pub config: SimulateArgs,
}

fn truth_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".truth.json");
    PathBuf::from(s)
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let design = Design::parse(&args.design)
        .ok_or_else(|| CliError::Usage(format!("unknown design {:?}", args.design)))?;
    let noise = Noise::parse(&args.noise).ok_or_else(|| CliError::Usage(format!("unknown noise {:?}", args.noise)))?;
    let (data, changepoints, theta_norms) = match args.preset.as_deref().map(str::to_ascii_uppercase) {
        Some(name) => {
            let spec = match name.as_str() {
                "M1" => MultiSpec::m1(args.rho_min, args.k, args.seed),
                "M2" => MultiSpec::m2(args.rho_min, args.k, args.seed),
                _ => return Err(CliError::Usage(format!("unknown layout {name:?}; expected M1 or M2"))),
            };
            let spec = MultiSpec {
                sigma: args.sigma,
                design,
                noise,
                ..spec
            };
            let (data, truth) = generate_multi(&spec)?;
            (data, truth.changepoints, truth.theta_norms)
        }
        None => {
            let cfg = SimConfig {
                sigma: args.sigma,
                design,
                noise,
                ..SimConfig::new(args.n, args.p, args.k, args.rho, args.tau, args.seed)
            };
            let (data, truth) = generate_single(&cfg)?;
            let norm = truth.theta.iter().map(|v| v * v).sum::<f64>().sqrt();
            (data, vec![truth.z], vec![norm])
        }
    };
    io::write_data(&args.output, &data)?;
    let truth = Truth {
        n: data.n(),
        p: data.p(),
        changepoints,
        theta_norms,
        seed: args.seed,
        config: args.clone(),
    };
    let path = args.truth.clone().unwrap_or_else(|| truth_path(&args.output));
    io::write_json(Some(&path), &truth)
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum GevReport {
    Fitted(GevParams),
    Fallback(&'static str),
}

#[derive(Debug, Serialize)]
pub struct ThresholdReport {
    #[serde(rename = "T")]
    pub threshold: f64,
    pub gev_params: GevReport,
    #[serde(rename = "B")]
    pub b: usize,
    pub level: f64,
    pub seed: u64,
    pub config: CalibrateArgs,
}

pub fn cmd_calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let cfg = CalibrationConfig {
        alpha: args.alpha,
        lam_coef: args.lambda_c,
        known_sigma: args.known_sigma,
        b: args.b,
        intervals: args.intervals,
        level: args.level,
        ..CalibrationConfig::new(args.n, args.p, args.seed)
    };
    let cal = calibrate_threshold(&cfg)?;
    let report = ThresholdReport {
        threshold: cal.threshold,
        gev_params: match cal.gev {
            Some(g) if g.upper_quantile(cal.level).is_finite() => GevReport::Fitted(g),
            _ => GevReport::Fallback("empirical-fallback"),
        },
        b: args.b,
        level: cal.level,
        seed: args.seed,
        config: args.clone(),
    };
    io::write_json(args.output.as_deref(), &report)
}

#[derive(Debug, Serialize)]
pub struct BenchmarkSummary {
    pub preset: String,
    pub seed: u64,
    pub reps: usize,
    pub aggregates: Vec<charcoal::simulate::Aggregate>,
    pub thresholds: Vec<(String, f64)>,
}

pub fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let mut scenarios = preset(&args.preset).ok_or_else(|| {
        CliError::Usage(format!("unknown preset {:?}; available: {}", args.preset, PRESETS.join(", ")))
    })?;
    if let Some(f) = &args.filter {
        scenarios.retain(|s| s.name().contains(f.as_str()));
        if scenarios.is_empty() {
            return Err(CliError::Usage(format!("no scenario of {:?} matches {f:?}", args.preset)));
        }
    }
    let result = run_benchmark(&scenarios, args.reps, args.seed, !args.no_timing)?;
    let mut w = csv::Writer::from_path(&args.output)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.output.display())))?;
    for r in &result.records {
        w.serialize(r).map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    let summary = BenchmarkSummary {
        preset: args.preset.clone(),
        seed: result.seed,
        reps: result.reps,
        aggregates: result.aggregates,
        thresholds: result.thresholds,
    };
    io::write_json(args.summary.as_deref(), &summary)
}
