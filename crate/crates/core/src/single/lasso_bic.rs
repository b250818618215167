//! Lasso-BIC changepoint estimator.
//!
//! For each hypothesised change time `t`, regress `Z` on `W_t` with the Lasso
//! and score the fit by `H_t = -(RSS_t + |supp| ln m)`. Everything the Lasso
//! needs from `W_t` is its Gram matrix and `W_t^T Z`, so instead of refitting
//! on `W_t` directly we stream those quantities, one per cross-validation
//! fold of the sketched rows, alongside the rank-one recursion for `W_t`.

use rand::seq::SliceRandom;

use super::{argmax_first, SingleEstimate};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, lasso_gram, GramState, Matrix};
use crate::rng;
use crate::sketch::{rank_one_step, sketch, window, RegressionData};

pub const CV_FOLDS: usize = 5;
pub const CV_GRID_LEN: usize = 50;
/// Smallest grid penalty relative to `lam_max`.
pub const CV_MIN_RATIO: f64 = 1e-3;
/// The penalty path stops once this many consecutive grid points fail to
/// improve the cross-validation error.
pub const CV_PATIENCE: usize = 5;

/// Per-time Lasso penalties.
#[derive(Debug, Clone, PartialEq)]
pub enum LassoLambda {
    /// 5-fold cross-validation over a geometric grid from `lam_max` down to
    /// `1e-3 lam_max`, with folds drawn from `seed`.
    CrossValidated { seed: u64 },
    /// One penalty for every `t`, or one per `t = 1..n-1`.
    Fixed(Vec<f64>),
}

impl LassoLambda {
    pub fn cv(seed: u64) -> Self {
        LassoLambda::CrossValidated { seed }
    }
}

/// `G += 2 x r^T + 2 r x^T + 4 s x x^T`, the Gram update for
/// `W <- W + 2 a x^T` with `r = W^T a` and `s = ||a||^2`.
fn gram_update(g: &mut Matrix, x: &[f64], r: &[f64], s: f64) {
    for (i, (&xi, &ri)) in x.iter().zip(r).enumerate() {
        let (cr, cx) = (2.0 * xi, 2.0 * ri + 4.0 * s * xi);
        for ((gij, rj), xj) in g.row_mut(i).iter_mut().zip(r).zip(x) {
            *gij += cr * rj + cx * xj;
        }
    }
}

struct Folds {
    label: Vec<usize>,
    count: usize,
    sizes: Vec<usize>,
}

impl Folds {
    fn random(m: usize, k: usize, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng::from_seed(seed));
        let mut label = vec![0; m];
        let mut sizes = vec![0; k];
        for (pos, &row) in order.iter().enumerate() {
            label[row] = pos % k;
            sizes[pos % k] += 1;
        }
        Self {
            label,
            count: k,
            sizes,
        }
    }

    fn single(m: usize) -> Self {
        Self {
            label: vec![0; m],
            count: 1,
            sizes: vec![m],
        }
    }
}

/// Streamed Gram matrices and correlations for the current `t`: the full
/// `W_t^T W_t`, `W_t^T Z`, and the same restricted to each fold's training
/// rows.
struct FoldStats {
    gram: Matrix,
    corr: Vec<f64>,
    train_grams: Vec<Matrix>,
    train_corr: Vec<Vec<f64>>,
    /// `||Z_f||^2` of each held-out fold.
    z_sq: Vec<f64>,
}

/// `coef^T G coef` over the support of `coef`.
fn quad_form_on_support(g: &Matrix, coef: &[f64], support: &[usize]) -> f64 {
    let mut acc = 0.0;
    for &a in support {
        let row = g.row(a);
        let inner: f64 = support.iter().map(|&b| row[b] * coef[b]).sum();
        acc += coef[a] * inner;
    }
    acc
}

/// Cross-validated penalty for the current `t`, or `None` when `W_t^T Z = 0`.
///
/// `warm[f][i]` holds the fold-`f` solution at grid index `i` from the
/// previous `t`, used as the starting point and then overwritten.
fn cv_penalty(
    stats: &FoldStats,
    folds: &Folds,
    m: usize,
    warm: &mut [Vec<Vec<f64>>],
) -> Result<Option<f64>> {
    let p = stats.corr.len();
    let lam_max = stats.corr.iter().fold(0.0_f64, |a, v| a.max(v.abs())) / m as f64;
    if lam_max == 0.0 {
        return Ok(None);
    }
    let k = folds.count;
    let z_sq_total: f64 = stats.z_sq.iter().sum();
    let mut states = vec![GramState::zeros(p); k];
    let mut support = Vec::with_capacity(p);
    let (mut best_err, mut best_i) = (f64::INFINITY, 0);
    let step = CV_MIN_RATIO.powf(1.0 / (CV_GRID_LEN - 1) as f64);

    for i in 0..CV_GRID_LEN {
        let lam = lam_max * step.powi(i as i32);
        let mut err = 0.0;
        for f in 0..k {
            let (train_gram, train_corr) = (&stats.train_grams[f], &stats.train_corr[f]);
            let train_m = (m - folds.sizes[f]) as f64;
            let state = &mut states[f];
            if let Some(prev) = warm[f].get(i) {
                *state = GramState::from_coef(train_gram, prev);
            }
            lasso_gram(train_gram, train_corr, z_sq_total - stats.z_sq[f], train_m, lam, state)?;
            support.clear();
            support.extend((0..p).filter(|&j| state.coef[j] != 0.0));
            // Held-out rows: G_f = G - G_train and c_f = c - c_train.
            let coef = &state.coef;
            let held_quad = quad_form_on_support(&stats.gram, coef, &support) - dot(coef, &state.g_coef);
            let held_corr = dot(&stats.corr, coef) - dot(train_corr, coef);
            err += stats.z_sq[f] - 2.0 * held_corr + held_quad;
            match warm[f].get_mut(i) {
                Some(prev) => prev.copy_from_slice(&state.coef),
                None => warm[f].push(state.coef.clone()),
            }
        }
        if err < best_err {
            best_err = err;
            best_i = i;
        } else if i - best_i >= CV_PATIENCE {
            break;
        }
    }
    Ok(Some(lam_max * step.powi(best_i as i32)))
}

/// `-(rss + support ln m)`.
pub fn bic_score(rss: f64, support: usize, m: usize) -> f64 {
    -(rss + support as f64 * (m as f64).ln())
}

/// Scans `H_t = -(||Z - W_t theta_t||^2 + ||theta_t||_0 ln m)` over the
/// burn-in window, `theta_t` being the Lasso fit of `Z` on `W_t`, and returns
/// its first maximiser.
pub fn estimate_lasso_bic(
    data: &RegressionData,
    alpha: f64,
    strategy: &LassoLambda,
) -> Result<SingleEstimate> {
    let (n, p) = (data.n(), data.p());
    if n <= p {
        return Err(Error::Dimension(format!(
            "Lasso-BIC needs n > p for the sketch (n = {n}, p = {p})"
        )));
    }
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::Config(format!("burn-in fraction {alpha} outside [0, 1/2)")));
    }
    let (t_lo, t_hi) =
        window(n, alpha).ok_or_else(|| Error::Dimension(format!("no scan window for n = {n}")))?;
    if let LassoLambda::Fixed(seq) = strategy {
        if !(seq.len() == 1 || seq.len() == n - 1) || seq.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::Config(format!(
                "fixed Lasso penalties must be positive, one or n - 1 = {} of them",
                n - 1
            )));
        }
    }

    let sk = sketch(data)?;
    let m = sk.m();
    let z = &sk.z;
    let z_sq_total = dot(z, z);

    let folds = match strategy {
        LassoLambda::CrossValidated { seed } if m >= 2 => {
            Folds::random(m, CV_FOLDS.min(m), *seed)
        }
        _ => Folds::single(m),
    };
    let k = folds.count;
    let mut z_sq = vec![0.0; k];
    for (i, zi) in z.iter().enumerate() {
        z_sq[folds.label[i]] += zi * zi;
    }
    let mut stats = FoldStats {
        gram: Matrix::zeros(p, p),
        corr: vec![0.0; p],
        train_grams: if k > 1 { vec![Matrix::zeros(p, p); k] } else { Vec::new() },
        train_corr: if k > 1 { vec![vec![0.0; p]; k] } else { Vec::new() },
        z_sq,
    };

    let mut w = Matrix::zeros(m, p);
    let mut proj = vec![vec![0.0; p]; k];
    let mut total_proj = vec![0.0; p];
    let mut train_proj = vec![0.0; p];
    let mut trace = Vec::with_capacity(t_hi - t_lo + 1);
    let mut warm: Vec<Vec<Vec<f64>>> = vec![Vec::new(); k];
    let mut last_fit = vec![0.0; p];

    for t in 1..=t_hi {
        let a = sk.basis.row(t - 1);
        let x = data.x.row(t - 1);
        rank_one_step(&mut w, a, x, Some(&folds.label), &mut proj);

        let mut a_sq = vec![0.0; k];
        let mut a_z = vec![0.0; k];
        for (i, (&ai, &zi)) in a.iter().zip(z).enumerate() {
            a_sq[folds.label[i]] += ai * ai;
            a_z[folds.label[i]] += ai * zi;
        }
        let (a_sq_total, a_z_total): (f64, f64) = (a_sq.iter().sum(), a_z.iter().sum());
        total_proj.iter_mut().for_each(|v| *v = 0.0);
        for pf in &proj {
            axpy(1.0, pf, &mut total_proj);
        }
        gram_update(&mut stats.gram, x, &total_proj, a_sq_total);
        axpy(2.0 * a_z_total, x, &mut stats.corr);
        for f in 0..stats.train_grams.len() {
            for ((tp, tot), pf) in train_proj.iter_mut().zip(&total_proj).zip(&proj[f]) {
                *tp = tot - pf;
            }
            gram_update(&mut stats.train_grams[f], x, &train_proj, a_sq_total - a_sq[f]);
            axpy(2.0 * (a_z_total - a_z[f]), x, &mut stats.train_corr[f]);
        }

        if t < t_lo {
            continue;
        }
        let lam = match strategy {
            LassoLambda::Fixed(seq) if seq.len() == 1 => Some(seq[0]),
            LassoLambda::Fixed(seq) => Some(seq[t - 1]),
            LassoLambda::CrossValidated { .. } if k > 1 => cv_penalty(&stats, &folds, m, &mut warm)?,
            // Too few sketched rows to cross-validate: keep the null fit.
            LassoLambda::CrossValidated { .. } => None,
        };
        let h = match lam {
            Some(lam) => {
                let mut state = GramState::from_coef(&stats.gram, &last_fit);
                lasso_gram(&stats.gram, &stats.corr, z_sq_total, m as f64, lam, &mut state)?;
                last_fit.copy_from_slice(&state.coef);
                let rss = state.rss(z_sq_total, &stats.corr);
                bic_score(rss, state.support_size(), m)
            }
            None => -z_sq_total,
        };
        trace.push(h);
    }

    Ok(SingleEstimate {
        location: t_lo + argmax_first(&trace),
        h_max: 0.0,
        direction: None,
        t_lo,
        trace,
    })
}
