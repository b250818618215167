//! Synthetic data, evaluation metrics and the benchmark runner.

use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::multi::{detect_multiple, MultiConfig};
use crate::rng::{self, Rng};
use crate::single::{calibrate_threshold, CalibrationConfig, Method};
use crate::sketch::RegressionData;

/// Autocorrelation of the Toeplitz design.
pub const AR_PHI: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    GaussIid,
    /// Gaussian rows with covariance `0.7^|i-j|`.
    ArToeplitz,
    Rademacher,
}

impl Design {
    pub const ALL: [Design; 3] = [Design::GaussIid, Design::ArToeplitz, Design::Rademacher];

    pub fn name(&self) -> &'static str {
        match self {
            Design::GaussIid => "gauss-iid",
            Design::ArToeplitz => "ar-toeplitz",
            Design::Rademacher => "rademacher",
        }
    }

    pub fn parse(s: &str) -> Option<Design> {
        Design::ALL.into_iter().find(|d| d.name() == s)
    }

    fn fill_row(&self, row: &mut [f64], rng: &mut Rng) {
        match self {
            Design::GaussIid => row.iter_mut().for_each(|v| *v = StandardNormal.sample(rng)),
            Design::Rademacher => row.iter_mut().for_each(|v| *v = rademacher(rng)),
            Design::ArToeplitz => {
                let innov = (1.0 - AR_PHI * AR_PHI).sqrt();
                let mut prev = 0.0;
                for (j, v) in row.iter_mut().enumerate() {
                    let e: f64 = StandardNormal.sample(rng);
                    prev = if j == 0 { e } else { AR_PHI * prev + innov * e };
                    *v = prev;
                }
            }
        }
    }

    fn matrix(&self, n: usize, p: usize, rng: &mut Rng) -> Matrix {
        let mut x = Matrix::zeros(n, p);
        for i in 0..n {
            self.fill_row(x.row_mut(i), rng);
        }
        x
    }
}

/// Noise laws, each standardised to unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    Gauss,
    T4,
    T6,
    ExpCentered,
    Rademacher,
}

impl Noise {
    pub const ALL: [Noise; 5] = [
        Noise::Gauss,
        Noise::T4,
        Noise::T6,
        Noise::ExpCentered,
        Noise::Rademacher,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Noise::Gauss => "gauss",
            Noise::T4 => "t4",
            Noise::T6 => "t6",
            Noise::ExpCentered => "exp-centered",
            Noise::Rademacher => "rademacher",
        }
    }

    pub fn parse(s: &str) -> Option<Noise> {
        Noise::ALL.into_iter().find(|d| d.name() == s)
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            Noise::Gauss => StandardNormal.sample(rng),
            Noise::T4 => student(4.0, rng) / 2f64.sqrt(),
            Noise::T6 => student(6.0, rng) / 1.5f64.sqrt(),
            Noise::ExpCentered => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            Noise::Rademacher => rademacher(rng),
        }
    }
}

fn rademacher(rng: &mut Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn student(dof: f64, rng: &mut Rng) -> f64 {
    StudentT::new(dof).expect("positive degrees of freedom").sample(rng)
}

fn gaussian_vec(len: usize, scale: f64, rng: &mut Rng) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            scale * g
        })
        .collect()
}

/// A `k`-sparse vector with uniformly chosen support and a direction uniform
/// on that support's sphere, scaled to norm `rho`.
pub fn sparse_change(p: usize, k: usize, rho: f64, rng: &mut Rng) -> Vec<f64> {
    let mut theta = vec![0.0; p];
    if rho == 0.0 {
        return theta;
    }
    let support = sample_indices(rng, p, k);
    for j in support.iter() {
        theta[j] = StandardNormal.sample(rng);
    }
    let norm = dot(&theta, &theta).sqrt();
    theta.iter_mut().for_each(|v| *v *= rho / norm);
    theta
}

/// Single-change simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub rho: f64,
    pub tau: f64,
    pub sigma: f64,
    pub design: Design,
    pub noise: Noise,
    pub seed: u64,
}

impl SimConfig {
    /// Gaussian design and unit Gaussian noise.
    pub fn new(n: usize, p: usize, k: usize, rho: f64, tau: f64, seed: u64) -> Self {
        Self {
            n,
            p,
            k,
            rho,
            tau,
            sigma: 1.0,
            design: Design::GaussIid,
            noise: Noise::Gauss,
            seed,
        }
    }

    /// `round(tau n)`.
    pub fn changepoint(&self) -> usize {
        (self.tau * self.n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let z = self.changepoint();
        let ok = self.p >= 1
            && self.k >= 1
            && self.k <= self.p
            && self.rho >= 0.0
            && self.rho.is_finite()
            && self.sigma >= 0.0
            && self.sigma.is_finite()
            && self.tau > 0.0
            && self.tau < 1.0
            && z >= 1
            && z < self.n;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid simulation settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleTruth {
    pub z: usize,
    /// `(beta_pre - beta_post) / 2`.
    pub theta: Vec<f64>,
    pub beta_pre: Vec<f64>,
}

/// Draws `Y` row by row under piecewise-constant coefficients.
fn responses(
    x: &Matrix,
    betas: &[Vec<f64>],
    changepoints: &[usize],
    sigma: f64,
    noise: Noise,
    rng: &mut Rng,
) -> Vec<f64> {
    let mut segment = 0;
    (0..x.rows())
        .map(|i| {
            while segment < changepoints.len() && i >= changepoints[segment] {
                segment += 1;
            }
            let eps = if sigma == 0.0 { 0.0 } else { sigma * noise.sample(rng) };
            dot(x.row(i), &betas[segment]) + eps
        })
        .collect()
}

pub fn generate_single(cfg: &SimConfig) -> Result<(RegressionData, SingleTruth)> {
    cfg.validate()?;
    let mut rng = rng::from_seed(cfg.seed);
    let z = cfg.changepoint();
    let theta = sparse_change(cfg.p, cfg.k, cfg.rho, &mut rng);
    let beta_pre = gaussian_vec(cfg.p, cfg.rho.max(1.0), &mut rng);
    let beta_post: Vec<f64> = beta_pre.iter().zip(&theta).map(|(b, t)| b - 2.0 * t).collect();
    let x = cfg.design.matrix(cfg.n, cfg.p, &mut rng);
    let y = responses(
        &x,
        &[beta_pre.clone(), beta_post],
        &[z],
        cfg.sigma,
        cfg.noise,
        &mut rng,
    );
    Ok((
        RegressionData::new(x, y)?,
        SingleTruth { z, theta, beta_pre },
    ))
}

/// Multiple-change simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSpec {
    pub n: usize,
    pub p: usize,
    pub changepoints: Vec<usize>,
    /// `||theta_i||_2` for each change.
    pub magnitudes: Vec<f64>,
    pub k: usize,
    pub sigma: f64,
    pub design: Design,
    pub noise: Noise,
    pub seed: u64,
}

impl MultiSpec {
    pub fn new(n: usize, p: usize, changepoints: Vec<usize>, magnitudes: Vec<f64>, k: usize, seed: u64) -> Self {
        Self {
            n,
            p,
            changepoints,
            magnitudes,
            k,
            sigma: 1.0,
            design: Design::GaussIid,
            noise: Noise::Gauss,
            seed,
        }
    }

    /// Three changes in `n = 1200, p = 200` with growing magnitudes.
    pub fn m1(rho_min: f64, k: usize, seed: u64) -> Self {
        let mags = [1.0, 1.5, 2.0].iter().map(|f| f * rho_min).collect();
        Self::new(1200, 200, vec![240, 540, 900], mags, k, seed)
    }

    /// Four changes in `n = 2400, p = 400`, magnitudes chosen so that every
    /// change has about the same effective signal-to-noise ratio.
    pub fn m2(rho_min: f64, k: usize, seed: u64) -> Self {
        let mags = [1.0, 1.15, 1.45, 2.18].iter().map(|f| f * rho_min).collect();
        Self::new(2400, 400, vec![720, 1320, 1800, 2160], mags, k, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let increasing = self.changepoints.windows(2).all(|w| w[0] < w[1]);
        let inside = self.changepoints.iter().all(|&z| z > 0 && z < self.n);
        let ok = increasing
            && inside
            && self.changepoints.len() == self.magnitudes.len()
            && self.magnitudes.iter().all(|r| *r >= 0.0 && r.is_finite())
            && self.p >= 1
            && self.k >= 1
            && self.k <= self.p
            && self.sigma >= 0.0
            && self.sigma.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid multi-change settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTruth {
    pub changepoints: Vec<usize>,
    /// `theta_i = (beta_i - beta_{i+1}) / 2`.
    pub thetas: Vec<Vec<f64>>,
    pub theta_norms: Vec<f64>,
}

pub fn generate_multi(spec: &MultiSpec) -> Result<(RegressionData, MultiTruth)> {
    spec.validate()?;
    let mut rng = rng::from_seed(spec.seed);
    let thetas: Vec<Vec<f64>> = spec
        .magnitudes
        .iter()
        .map(|&rho| sparse_change(spec.p, spec.k, rho, &mut rng))
        .collect();
    let scale = spec.magnitudes.iter().fold(1.0_f64, |a, r| a.max(*r));
    let mut betas = vec![gaussian_vec(spec.p, scale, &mut rng)];
    for theta in &thetas {
        let prev = betas.last().expect("nonempty");
        betas.push(prev.iter().zip(theta).map(|(b, t)| b - 2.0 * t).collect());
    }
    let x = spec.design.matrix(spec.n, spec.p, &mut rng);
    let y = responses(&x, &betas, &spec.changepoints, spec.sigma, spec.noise, &mut rng);
    let theta_norms = thetas.iter().map(|t| dot(t, t).sqrt()).collect();
    Ok((
        RegressionData::new(x, y)?,
        MultiTruth {
            changepoints: spec.changepoints.clone(),
            thetas,
            theta_norms,
        },
    ))
}

/// Hausdorff distance between two changepoint sets; `n` if exactly one is
/// empty, 0 if both are.
pub fn hausdorff(a: &[usize], b: &[usize], n: usize) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return n as f64,
        _ => {}
    }
    let directed = |from: &[usize], to: &[usize]| {
        from.iter()
            .map(|&x| to.iter().map(|&y| x.abs_diff(y)).min().unwrap_or(0))
            .max()
            .unwrap_or(0)
    };
    directed(a, b).max(directed(b, a)) as f64
}

fn choose2(v: usize) -> f64 {
    let v = v as f64;
    v * (v - 1.0) / 2.0
}

/// Segment lengths of `{1..n}` cut after each changepoint.
fn segment_bounds(cps: &[usize], n: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = cps.iter().copied().filter(|&c| c > 0 && c < n).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(0);
    bounds.extend(cuts);
    bounds.push(n);
    bounds
}

/// Adjusted Rand index between the segmentations of `{1..n}` induced by two
/// changepoint sets.
pub fn adjusted_rand_index(a: &[usize], b: &[usize], n: usize) -> f64 {
    let (ba, bb) = (segment_bounds(a, n), segment_bounds(b, n));
    // Contingency counts are overlaps of segment pairs; walk both in order.
    let mut sum_ij = 0.0;
    let (mut i, mut j) = (0, 0);
    while i + 1 < ba.len() && j + 1 < bb.len() {
        let lo = ba[i].max(bb[j]);
        let hi = ba[i + 1].min(bb[j + 1]);
        if hi > lo {
            sum_ij += choose2(hi - lo);
        }
        if ba[i + 1] <= bb[j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    let sum_a: f64 = ba.windows(2).map(|w| choose2(w[1] - w[0])).sum();
    let sum_b: f64 = bb.windows(2).map(|w| choose2(w[1] - w[0])).sum();
    let expected = sum_a * sum_b / choose2(n);
    let denom = 0.5 * (sum_a + sum_b) - expected;
    if denom == 0.0 {
        return if ba == bb { 1.0 } else { 0.0 };
    }
    (sum_ij - expected) / denom
}

/// One benchmark setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Single {
        name: String,
        sim: SimConfig,
        methods: Vec<Method>,
        alpha: f64,
        lam_coef: f64,
    },
    Multi {
        name: String,
        spec: MultiSpec,
        config: MultiConfig,
        /// Null replicates used to calibrate the threshold when
        /// `config.threshold` is not set.
        calibration_b: usize,
    },
}

impl Scenario {
    pub fn name(&self) -> &str {
        match self {
            Scenario::Single { name, .. } | Scenario::Multi { name, .. } => name,
        }
    }
}

pub const PRESETS: [&str; 5] = ["table1", "table2-charcoal", "table3-M1", "table3-M2", "robustness"];

fn single_scenario(name: String, sim: SimConfig, methods: &[Method]) -> Scenario {
    Scenario::Single {
        name,
        sim,
        methods: methods.to_vec(),
        alpha: 0.0,
        lam_coef: 0.5,
    }
}

/// Named benchmark suites.
pub fn preset(name: &str) -> Option<Vec<Scenario>> {
    let scenarios = match name {
        "table1" => vec![single_scenario(
            "n600-p200-k3-rho4".into(),
            SimConfig::new(600, 200, 3, 4.0, 0.3, 0),
            &Method::ALL,
        )],
        "table2-charcoal" => vec![single_scenario(
            "n1200-p400-k3-rho4".into(),
            SimConfig::new(1200, 400, 3, 4.0, 0.3, 0),
            &[Method::Proj, Method::LassoBic],
        )],
        "table3-M1" | "table3-M2" => {
            let spec = if name == "table3-M1" {
                MultiSpec::m1(1.6, 3, 0)
            } else {
                MultiSpec::m2(1.6, 3, 0)
            };
            vec![Scenario::Multi {
                name: format!("{}-rho1.6-k3", &name[7..]),
                spec,
                config: MultiConfig::default(),
                calibration_b: 1000,
            }]
        }
        "robustness" => {
            let combos = [
                (Design::ArToeplitz, Noise::Gauss),
                (Design::Rademacher, Noise::Gauss),
                (Design::GaussIid, Noise::T4),
                (Design::GaussIid, Noise::T6),
                (Design::GaussIid, Noise::ExpCentered),
                (Design::GaussIid, Noise::Rademacher),
                (Design::ArToeplitz, Noise::T4),
            ];
            let mut out = Vec::new();
            for (design, noise) in combos {
                for e in 0..=8 {
                    let rho = 1.5f64.powi(e);
                    let sim = SimConfig {
                        design,
                        noise,
                        ..SimConfig::new(1200, 400, 20, rho, 0.3, 0)
                    };
                    out.push(single_scenario(
                        format!("{}-{}-rho1.5^{e}", design.name(), noise.name()),
                        sim,
                        &[Method::Proj, Method::LassoBic],
                    ));
                }
            }
            out
        }
        _ => return None,
    };
    Some(scenarios)
}

/// One estimator on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub scenario: String,
    pub rep: usize,
    pub estimator: String,
    /// `|z_hat - z|` for single-change scenarios.
    pub loss: Option<f64>,
    /// `nu_hat - nu` for multi-change scenarios.
    pub count_error: Option<i64>,
    pub hausdorff: Option<f64>,
    pub ari: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scenario: String,
    pub estimator: String,
    pub reps: usize,
    pub mean_loss: Option<f64>,
    pub rmse: Option<f64>,
    /// Replicates with `nu_hat = nu`.
    pub exact_count: Option<usize>,
    pub mean_hausdorff: Option<f64>,
    pub mean_ari: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub seed: u64,
    pub reps: usize,
    pub records: Vec<RepRecord>,
    pub aggregates: Vec<Aggregate>,
    /// Calibrated thresholds of multi-change scenarios, by scenario name.
    pub thresholds: Vec<(String, f64)>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

fn aggregate(scenario: &str, estimator: &str, recs: &[&RepRecord]) -> Aggregate {
    let losses = || recs.iter().filter_map(|r| r.loss);
    Aggregate {
        scenario: scenario.to_string(),
        estimator: estimator.to_string(),
        reps: recs.len(),
        mean_loss: mean(losses()),
        rmse: mean(losses().map(|l| l * l)).map(f64::sqrt),
        exact_count: recs
            .iter()
            .any(|r| r.count_error.is_some())
            .then(|| recs.iter().filter(|r| r.count_error == Some(0)).count()),
        mean_hausdorff: mean(recs.iter().filter_map(|r| r.hausdorff)),
        mean_ari: mean(recs.iter().filter_map(|r| r.ari)),
    }
}

fn timed<T>(timing: bool, f: impl FnOnce() -> T) -> (T, Option<f64>) {
    let start = timing.then(Instant::now);
    let out = f();
    (out, start.map(|s| s.elapsed().as_secs_f64() * 1e3))
}

fn run_scenario(
    scenario: &Scenario,
    index: usize,
    reps: usize,
    seed: u64,
    timing: bool,
) -> Result<(Vec<RepRecord>, Option<f64>)> {
    let scenario_seed = rng::derive_seed(seed, index as u64);
    let rep_seed = |rep: usize| rng::derive_seed(scenario_seed, rep as u64);
    match scenario {
        Scenario::Single {
            name,
            sim,
            methods,
            alpha,
            lam_coef,
        } => {
            let per_rep: Vec<Result<Vec<RepRecord>>> = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let s = rep_seed(rep);
                    let cfg = SimConfig {
                        seed: rng::derive_seed(s, 0),
                        ..*sim
                    };
                    let (data, truth) = generate_single(&cfg)?;
                    methods
                        .iter()
                        .map(|m| {
                            let (out, wall_ms) = timed(timing, || {
                                m.run(&data, *alpha, *lam_coef, rng::derive_seed(s, 1))
                            });
                            let est = out?.estimate;
                            Ok(RepRecord {
                                scenario: name.clone(),
                                rep,
                                estimator: m.name().to_string(),
                                loss: Some(est.location.abs_diff(truth.z) as f64),
                                count_error: None,
                                hausdorff: None,
                                ari: None,
                                wall_ms,
                            })
                        })
                        .collect()
                })
                .collect();
            let mut records = Vec::new();
            for r in per_rep {
                records.extend(r?);
            }
            Ok((records, None))
        }
        Scenario::Multi {
            name,
            spec,
            config,
            calibration_b,
        } => {
            let threshold = match config.threshold {
                Some(t) => t,
                None => {
                    let cal = CalibrationConfig {
                        alpha: config.alpha,
                        lam_coef: config.lam_coef,
                        b: *calibration_b,
                        intervals: config.intervals,
                        level: config.level,
                        ..CalibrationConfig::new(spec.n, spec.p, rng::derive_seed(scenario_seed, u64::MAX))
                    };
                    calibrate_threshold(&cal)?.threshold
                }
            };
            let per_rep: Vec<Result<RepRecord>> = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let s = rep_seed(rep);
                    let spec = MultiSpec {
                        seed: rng::derive_seed(s, 0),
                        ..spec.clone()
                    };
                    let (data, truth) = generate_multi(&spec)?;
                    let cfg = MultiConfig {
                        threshold: Some(threshold),
                        seed: rng::derive_seed(s, 1),
                        ..config.clone()
                    };
                    let (out, wall_ms) = timed(timing, || detect_multiple(&data, &cfg));
                    let found = out?.refined;
                    let n = data.n();
                    Ok(RepRecord {
                        scenario: name.clone(),
                        rep,
                        estimator: "not-lasso-bic".to_string(),
                        loss: None,
                        count_error: Some(found.len() as i64 - truth.changepoints.len() as i64),
                        hausdorff: Some(hausdorff(&found, &truth.changepoints, n)),
                        ari: Some(adjusted_rand_index(&found, &truth.changepoints, n)),
                        wall_ms,
                    })
                })
                .collect();
            Ok((per_rep.into_iter().collect::<Result<_>>()?, Some(threshold)))
        }
    }
}

/// Runs every scenario for `reps` replicates. Replicate seeds derive from
/// `seed`, so the output does not depend on thread count; with `timing` off
/// it is bit-identical across runs.
pub fn run_benchmark(
    scenarios: &[Scenario],
    reps: usize,
    seed: u64,
    timing: bool,
) -> Result<BenchmarkResult> {
    if reps == 0 {
        return Err(Error::Config("benchmark needs at least one replicate".into()));
    }
    let mut records = Vec::new();
    let mut aggregates = Vec::new();
    let mut thresholds = Vec::new();
    for (index, scenario) in scenarios.iter().enumerate() {
        let (recs, threshold) = run_scenario(scenario, index, reps, seed, timing)?;
        if let Some(t) = threshold {
            thresholds.push((scenario.name().to_string(), t));
        }
        let mut estimators: Vec<&str> = Vec::new();
        for r in &recs {
            if !estimators.contains(&r.estimator.as_str()) {
                estimators.push(&r.estimator);
            }
        }
        for est in estimators {
            let group: Vec<&RepRecord> = recs.iter().filter(|r| r.estimator == est).collect();
            aggregates.push(aggregate(scenario.name(), est, &group));
        }
        records.extend(recs);
    }
    Ok(BenchmarkResult {
        seed,
        reps,
        records,
        aggregates,
        thresholds,
    })
}
