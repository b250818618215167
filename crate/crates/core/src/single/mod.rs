//! Single-changepoint estimation and testing.

mod calibrate;
mod gev;
mod lasso_bic;

pub use calibrate::{calibrate_threshold, empirical_quantile, Calibration, CalibrationConfig};
pub use gev::{fit_gev, GevParams};
pub use lasso_bic::{bic_score, estimate_lasso_bic, LassoLambda, CV_FOLDS, CV_GRID_LEN, CV_MIN_RATIO, CV_PATIENCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hard_norm, leading_left_singular_vector, soft_norm, soft_scalar, Matrix};
use crate::sketch::{estimate_sigma_mad, q_matrix_direct, QMatrix, RegressionData, Variant};

/// Output of a single-changepoint scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleEstimate {
    /// Estimated changepoint: the last time point before the change.
    pub location: usize,
    /// `max_t ||soft(Q_t, lam)||_2` over the window (0 for Lasso-BIC scans).
    pub h_max: f64,
    /// Projection direction, when one was estimated.
    pub direction: Option<Vec<f64>>,
    /// First time point of the scanned window.
    pub t_lo: usize,
    /// Scanned statistic, one entry per window time point.
    pub trace: Vec<f64>,
}

/// `lam = 0.5 * sigma * ln p`.
pub fn default_lambda(p: usize, sigma_tilde: f64) -> f64 {
    scaled_lambda(0.5, p, sigma_tilde)
}

/// `lam = coef * sigma * ln p`.
pub fn scaled_lambda(coef: f64, p: usize, sigma: f64) -> f64 {
    coef * sigma * (p as f64).ln()
}

/// Index of the first maximum.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    Hard,
    Soft,
}

fn soft_trace(q: &QMatrix, lam: f64) -> Vec<f64> {
    (0..q.len()).map(|j| soft_norm(q.rows().row(j), lam)).collect()
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// Locates the change at the largest thresholded column norm.
pub fn estimate_threshold_argmax(q: &QMatrix, lam: f64, mode: ThresholdMode) -> SingleEstimate {
    let soft = soft_trace(q, lam);
    let trace = match mode {
        ThresholdMode::Soft => soft.clone(),
        ThresholdMode::Hard => (0..q.len()).map(|j| hard_norm(q.rows().row(j), lam)).collect(),
    };
    SingleEstimate {
        location: q.t_lo() + argmax_first(&trace),
        h_max: max_of(&soft),
        direction: None,
        t_lo: q.t_lo(),
        trace,
    }
}

/// Projection estimator: aggregates each `Q_t` along the leading left
/// singular vector `v` of `soft(Q, lam)` and returns `argmax_t |v^T Q_t|`
/// together with `max_t ||soft(Q_t, lam)||_2`.
///
/// If thresholding removes everything there is no direction; the location
/// falls back to the (all-zero) soft trace, i.e. the window start.
pub fn estimate_proj(q: &QMatrix, lam: f64, seed: u64) -> Result<SingleEstimate> {
    let soft = soft_trace(q, lam);
    let h_max = max_of(&soft);
    if h_max == 0.0 {
        return Ok(SingleEstimate {
            location: q.t_lo() + argmax_first(&soft),
            h_max,
            direction: None,
            t_lo: q.t_lo(),
            trace: soft,
        });
    }
    let (t_len, p) = (q.len(), q.p());
    let shrunk = Matrix::from_fn(p, t_len, |i, j| soft_scalar(q.rows()[(j, i)], lam));
    let v = leading_left_singular_vector(&shrunk, seed)?.vector;
    let trace: Vec<f64> = (0..t_len)
        .map(|j| crate::linalg::dot(&v, q.rows().row(j)).abs())
        .collect();
    Ok(SingleEstimate {
        location: q.t_lo() + argmax_first(&trace),
        h_max,
        direction: Some(v),
        t_lo: q.t_lo(),
        trace,
    })
}

/// How the soft-threshold level is chosen for a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaRule {
    /// Use this level as is.
    Fixed(f64),
    /// `coef * sigma * ln p`, with `sigma` estimated by the scaled MAD of the
    /// statistic matrix when not given.
    Scaled { coef: f64, sigma: Option<f64> },
}

impl LambdaRule {
    pub fn mad(coef: f64) -> Self {
        LambdaRule::Scaled { coef, sigma: None }
    }

    pub fn resolve(&self, q: &QMatrix) -> (f64, f64) {
        match *self {
            LambdaRule::Fixed(lam) => (lam, f64::NAN),
            LambdaRule::Scaled { coef, sigma } => {
                let s = sigma.unwrap_or_else(|| estimate_sigma_mad(q));
                (scaled_lambda(coef, q.p(), s), s)
            }
        }
    }
}

/// Shared knobs of the `Q`-based estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub alpha: f64,
    pub lambda: LambdaRule,
    pub variant: Variant,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            lambda: LambdaRule::mad(0.5),
            variant: Variant::Diag,
            seed: 0,
        }
    }
}

/// A finished scan with the noise scale and threshold level it used.
#[derive(Debug, Clone, Serialize)]
pub struct ScanOutcome {
    pub estimate: SingleEstimate,
    /// NaN when the threshold level was fixed.
    pub sigma_tilde: f64,
    pub lambda: f64,
}

/// Sketch, stream `Q` over the burn-in window and resolve the threshold.
pub fn prepare_scan(data: &RegressionData, cfg: &ScanConfig) -> Result<(QMatrix, f64, f64)> {
    let q = q_matrix_direct(data, cfg.alpha, cfg.variant)?;
    let (lam, sigma) = cfg.lambda.resolve(&q);
    Ok((q, lam, sigma))
}

/// The projection estimator end to end.
pub fn charcoal_proj(data: &RegressionData, cfg: &ScanConfig) -> Result<ScanOutcome> {
    let (q, lambda, sigma_tilde) = prepare_scan(data, cfg)?;
    Ok(ScanOutcome {
        estimate: estimate_proj(&q, lambda, cfg.seed)?,
        sigma_tilde,
        lambda,
    })
}

/// Thresholded-norm estimators end to end.
pub fn charcoal_threshold(
    data: &RegressionData,
    cfg: &ScanConfig,
    mode: ThresholdMode,
) -> Result<ScanOutcome> {
    let (q, lambda, sigma_tilde) = prepare_scan(data, cfg)?;
    Ok(ScanOutcome {
        estimate: estimate_threshold_argmax(&q, lambda, mode),
        sigma_tilde,
        lambda,
    })
}

/// Existence test parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub lam: f64,
    pub threshold: f64,
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.alpha) || !(self.lam >= 0.0) || !(self.threshold > 0.0) {
            return Err(Error::Config(format!("invalid test configuration {self:?}")));
        }
        Ok(())
    }
}

/// `max_t ||soft(Q_t, lam)||_2` over the burn-in window, or `None` when the
/// data cannot be sketched (fewer than two sketched rows, or a rank-deficient
/// design).
pub fn h_max(data: &RegressionData, alpha: f64, lam: f64, variant: Variant) -> Option<f64> {
    if data.n() < data.p() + 2 {
        return None;
    }
    let q = q_matrix_direct(data, alpha, variant).ok()?;
    Some(max_of(&soft_trace(&q, lam)))
}

/// `H_max / sigma` with `lam = lam_coef * sigma * ln p`, where `sigma` is the
/// known noise level or, if absent, the scaled MAD of `Q`. The ratio has the
/// same law at every noise level, so one calibrated threshold serves all.
/// `None` when the data cannot be sketched or `sigma` is zero.
pub fn standardized_h_max(
    data: &RegressionData,
    alpha: f64,
    lam_coef: f64,
    sigma: Option<f64>,
) -> Option<f64> {
    if data.n() < data.p() + 2 {
        return None;
    }
    let q = q_matrix_direct(data, alpha, Variant::Diag).ok()?;
    let sigma = sigma.unwrap_or_else(|| estimate_sigma_mad(&q));
    if !(sigma > 0.0) {
        return None;
    }
    let lam = scaled_lambda(lam_coef, data.p(), sigma);
    Some(max_of(&soft_trace(&q, lam)) / sigma)
}

/// `1{max_t ||soft(Q_t, lam)||_2 >= T}`; data that cannot be sketched never
/// rejects.
pub fn single_test(data: &RegressionData, cfg: &TestConfig, variant: Variant) -> bool {
    h_max(data, cfg.alpha, cfg.lam, variant).is_some_and(|h| h >= cfg.threshold)
}

/// Named single-changepoint estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Soft,
    Hard,
    Proj,
    ProjPrimed,
    LassoBic,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Soft,
        Method::Hard,
        Method::Proj,
        Method::ProjPrimed,
        Method::LassoBic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Soft => "soft",
            Method::Hard => "hard",
            Method::Proj => "proj",
            Method::ProjPrimed => "proj-primed",
            Method::LassoBic => "lasso-bic",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Runs the estimator with `lam = lam_coef * sigma~ * ln p` (the
    /// threshold-based methods) or cross-validated penalties (Lasso-BIC).
    pub fn run(
        &self,
        data: &RegressionData,
        alpha: f64,
        lam_coef: f64,
        seed: u64,
    ) -> Result<ScanOutcome> {
        let cfg = ScanConfig {
            alpha,
            lambda: LambdaRule::mad(lam_coef),
            variant: Variant::Diag,
            seed,
        };
        match self {
            Method::Soft => charcoal_threshold(data, &cfg, ThresholdMode::Soft),
            Method::Hard => charcoal_threshold(data, &cfg, ThresholdMode::Hard),
            Method::Proj => charcoal_proj(data, &cfg),
            Method::ProjPrimed => charcoal_proj(
                data,
                &ScanConfig {
                    variant: Variant::Primed,
                    ..cfg
                },
            ),
            Method::LassoBic => Ok(ScanOutcome {
                estimate: estimate_lasso_bic(data, alpha, &LassoLambda::cv(seed))?,
                sigma_tilde: f64::NAN,
                lambda: f64::NAN,
            }),
        }
    }
}
