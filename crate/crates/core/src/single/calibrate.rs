//! Monte-Carlo calibration of the rejection threshold `T`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gev::{fit_gev, GevParams};
use super::standardized_h_max;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;
use crate::sketch::RegressionData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub n: usize,
    pub p: usize,
    pub alpha: f64,
    pub lam_coef: f64,
    /// Standardise by the true unit noise level instead of the MAD estimate.
    pub known_sigma: bool,
    /// Number of null replicates.
    pub b: usize,
    /// Number of random intervals the threshold will be used across.
    pub intervals: usize,
    /// Upper-tail probability; `0.01 / intervals` when absent.
    pub level: Option<f64>,
    pub seed: u64,
}

impl CalibrationConfig {
    pub fn new(n: usize, p: usize, seed: u64) -> Self {
        Self {
            n,
            p,
            alpha: 0.05,
            lam_coef: 0.5,
            known_sigma: false,
            b: 1000,
            intervals: 200,
            level: None,
            seed,
        }
    }

    pub fn level(&self) -> f64 {
        self.level.unwrap_or(0.01 / self.intervals.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Threshold for the standardised statistic `H_max / sigma`.
    pub threshold: f64,
    pub level: f64,
    /// `None` when the GEV fit failed and the empirical quantile was used.
    pub gev: Option<GevParams>,
    pub samples: Vec<f64>,
}

/// Type-7 (linear interpolation) sample quantile.
pub fn empirical_quantile(samples: &[f64], u: f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let h = (x.len() - 1) as f64 * u.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(x.len() - 1);
    x[lo] + (h - lo as f64) * (x[hi] - x[lo])
}

/// One null replicate: standard-normal design, `beta ~ N(0, I)` throughout
/// and unit Gaussian noise.
fn null_statistic(cfg: &CalibrationConfig, replicate: u64) -> f64 {
    let (n, p) = (cfg.n, cfg.p);
    let mut rng = rng::child(cfg.seed, replicate);
    let beta: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = Matrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            crate::linalg::dot(x.row(i), &beta) + e
        })
        .collect();
    let data = RegressionData::new(x, y).expect("finite simulated data");
    let sigma = cfg.known_sigma.then_some(1.0);
    standardized_h_max(&data, cfg.alpha, cfg.lam_coef, sigma).unwrap_or(0.0)
}

/// Upper-`level` quantile of the standardised `H_max` under the null, from a
/// GEV fitted to `b` simulated values (empirical quantile if the fit fails).
pub fn calibrate_threshold(cfg: &CalibrationConfig) -> Result<Calibration> {
    let level = cfg.level();
    if cfg.b < 50 {
        return Err(Error::Config(format!("calibration needs B >= 50, got {}", cfg.b)));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("calibration level {level} outside (0, 1)")));
    }
    if cfg.n < cfg.p + 2 || cfg.p < 2 {
        return Err(Error::Dimension(format!(
            "cannot calibrate with n = {}, p = {}",
            cfg.n, cfg.p
        )));
    }
    if !(0.0..0.5).contains(&cfg.alpha) || !(cfg.lam_coef >= 0.0) {
        return Err(Error::Config(format!("invalid calibration settings {cfg:?}")));
    }
    let samples: Vec<f64> = (0..cfg.b as u64)
        .into_par_iter()
        .map(|b| null_statistic(cfg, b))
        .collect();
    let gev = fit_gev(&samples).ok();
    let threshold = match gev {
        Some(g) if g.upper_quantile(level).is_finite() => g.upper_quantile(level),
        _ => empirical_quantile(&samples, 1.0 - level),
    };
    Ok(Calibration {
        threshold,
        level,
        gev,
        samples,
    })
}
