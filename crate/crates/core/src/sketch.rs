//! Complementary sketching and the streamed statistic matrix.
//!
//! With `A` an orthonormal basis of the complement of `col(X)`, the sketched
//! design hypothesising a change after time `t` is `W_t = 2 A_{(0,t]}^T X_{(0,t]}`
//! and the sketched response is `Z = A^T Y`. If the true change is at `z`,
//! `Z = W_z theta + A^T eps` with `theta` half the coefficient jump: the dense
//! common part of the coefficients has been projected away.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, complement_basis, dot, Matrix, QrFactor};

/// A design matrix (`n x p`) paired with its response (`n`). Row `i` holds
/// time point `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl RegressionData {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Dimension(format!(
                "design has {} rows but response has {} entries",
                x.rows(),
                y.len()
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: x.cols() });
        }
        Ok(Self { x, y })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Time points `(lo, hi]`, i.e. rows `lo..hi`.
    pub fn slice(&self, lo: usize, hi: usize) -> RegressionData {
        assert!(lo <= hi && hi <= self.n(), "slice ({lo}, {hi}] out of range");
        RegressionData {
            x: self.x.row_range(lo, hi),
            y: self.y[lo..hi].to_vec(),
        }
    }

    /// Whether the sketch exists (`n > p`).
    pub fn sketchable(&self) -> bool {
        self.n() > self.p()
    }
}

/// Orthonormal complement basis `A` (`n x m`, `m = n - p`) and `Z = A^T Y`.
#[derive(Debug, Clone)]
pub struct SketchedData {
    pub basis: Matrix,
    pub z: Vec<f64>,
}

impl SketchedData {
    pub fn m(&self) -> usize {
        self.basis.cols()
    }
}

pub fn sketch(data: &RegressionData) -> Result<SketchedData> {
    let basis = complement_basis(&data.x)?;
    let z = basis.t_matvec(&data.y);
    Ok(SketchedData { basis, z })
}

/// Normalisation of the per-time correlation vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `diag(W_t^T W_t)^{-1/2} W_t^T Z`.
    Diag,
    /// `sqrt(n / (t (n - t))) W_t^T Z`.
    Primed,
}

/// Column-norm floor below which a diagonal-normalised entry is set to zero.
pub const DIAG_FLOOR: f64 = 1e-12;

/// Scan window `[max(1, floor(alpha n)), min(n - 1, ceil((1 - alpha) n))]`.
pub fn window(n: usize, alpha: f64) -> Option<(usize, usize)> {
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    // Guard against products like 0.9 * 100 landing a hair above an integer.
    let lo = ((alpha * nf + 1e-9).floor() as usize).max(1);
    let hi = (((1.0 - alpha) * nf - 1e-9).ceil() as usize).min(n - 1);
    (lo <= hi).then_some((lo, hi))
}

/// Per-time statistics `Q_t` over a scan window, stored one time point per
/// row: row `j` of [`QMatrix::rows`] is `Q_{t_lo + j}`.
#[derive(Debug, Clone)]
pub struct QMatrix {
    stats: Matrix,
    t_lo: usize,
    t_hi: usize,
    variant: Variant,
    n: usize,
    degenerate: usize,
}

impl QMatrix {
    pub fn from_parts(stats: Matrix, t_lo: usize, variant: Variant, n: usize) -> Self {
        let t_hi = t_lo + stats.rows() - 1;
        Self {
            stats,
            t_lo,
            t_hi,
            variant,
            n,
            degenerate: 0,
        }
    }

    pub fn t_lo(&self) -> usize {
        self.t_lo
    }

    pub fn t_hi(&self) -> usize {
        self.t_hi
    }

    /// Number of time points in the window.
    pub fn len(&self) -> usize {
        self.stats.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.rows() == 0
    }

    pub fn p(&self) -> usize {
        self.stats.cols()
    }

    /// Sample size of the data the statistics came from.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Entries zeroed by the diagonal floor.
    pub fn degenerate_count(&self) -> usize {
        self.degenerate
    }

    /// `Q_t` for absolute time `t`.
    pub fn at(&self, t: usize) -> &[f64] {
        self.stats.row(t - self.t_lo)
    }

    /// Time-major storage (`T x p`).
    pub fn rows(&self) -> &Matrix {
        &self.stats
    }

    /// The `p x T` matrix `(Q_{t_lo}, ..., Q_{t_hi})`.
    pub fn as_matrix(&self) -> Matrix {
        self.stats.transpose()
    }

    pub fn times(&self) -> std::ops::RangeInclusive<usize> {
        self.t_lo..=self.t_hi
    }
}

/// One step of `W <- W + 2 a x^T`, returning `a^T W` (old `W`) in `proj`.
///
/// With `fold_of_row`, the projection is split by row group: `proj[f]`
/// accumulates `sum_{i in f} a_i W[i, :]`.
pub(crate) fn rank_one_step(
    w: &mut Matrix,
    a: &[f64],
    x: &[f64],
    fold_of_row: Option<&[usize]>,
    proj: &mut [Vec<f64>],
) {
    proj.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v = 0.0));
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let f = fold_of_row.map_or(0, |g| g[i]);
        let acc = &mut proj[f];
        let row = w.row_mut(i);
        let two_ai = 2.0 * ai;
        for ((r, wij), xj) in acc.iter_mut().zip(row.iter_mut()).zip(x) {
            *r += ai * *wij;
            *wij += two_ai * xj;
        }
    }
}

/// Streams `Q_t` for every `t` in the burn-in window.
///
/// Keeps only the current `W_t` (`m x p`), `u_t = W_t^T Z` and the squared
/// column norms `d_t = diag(W_t^T W_t)`, each updated in one pass over `W`
/// per time step. The primed variant needs `u_t` alone.
pub fn q_matrix(
    data: &RegressionData,
    sk: &SketchedData,
    alpha: f64,
    variant: Variant,
) -> Result<QMatrix> {
    let (n, p) = (data.n(), data.p());
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::Config(format!("burn-in fraction {alpha} outside [0, 1/2)")));
    }
    if sk.basis.rows() != n {
        return Err(Error::Dimension("sketch does not match data".into()));
    }
    let (t_lo, t_hi) = window(n, alpha)
        .ok_or_else(|| Error::Dimension(format!("no scan window for n = {n}")))?;
    let m = sk.m();

    let mut stats = Matrix::zeros(t_hi - t_lo + 1, p);
    let mut u = vec![0.0; p];
    let mut d = vec![0.0; p];
    let mut w = match variant {
        Variant::Diag => Matrix::zeros(m, p),
        Variant::Primed => Matrix::zeros(0, 0),
    };
    let mut proj = vec![vec![0.0; p]];
    let mut degenerate = 0;
    let nf = n as f64;

    for t in 1..=t_hi {
        let a = sk.basis.row(t - 1);
        let x = data.x.row(t - 1);
        let az = dot(a, &sk.z);
        for (uj, xj) in u.iter_mut().zip(x) {
            *uj += 2.0 * az * xj;
        }
        if variant == Variant::Diag {
            let a_sq = dot(a, a);
            rank_one_step(&mut w, a, x, None, &mut proj);
            for ((dj, xj), rj) in d.iter_mut().zip(x).zip(&proj[0]) {
                *dj += 4.0 * xj * rj + 4.0 * xj * xj * a_sq;
            }
        }
        if t < t_lo {
            continue;
        }
        let out = stats.row_mut(t - t_lo);
        match variant {
            Variant::Diag => {
                for ((o, uj), dj) in out.iter_mut().zip(&u).zip(&d) {
                    if *dj < DIAG_FLOOR {
                        *o = 0.0;
                        degenerate += 1;
                    } else {
                        *o = uj / dj.sqrt();
                    }
                }
            }
            Variant::Primed => {
                let tf = t as f64;
                let s = (nf / (tf * (nf - tf))).sqrt();
                for (o, uj) in out.iter_mut().zip(&u) {
                    *o = s * uj;
                }
            }
        }
    }

    Ok(QMatrix {
        stats,
        t_lo,
        t_hi,
        variant,
        n,
        degenerate,
    })
}

/// The same statistics as [`q_matrix`] without forming the sketch.
///
/// With `X = QR`, `P = A A^T = I - X S^{-1} X^T` and `S = X^T X`, one has
/// `W_t^T Z = 2 X_{(0,t]}^T r` for the least-squares residual `r = P Y`, and
/// `W_t^T W_t = 4 (S_t - B_t^T B_t)` with `S_t = X_{(0,t]}^T X_{(0,t]}` and
/// `B_t = R^{-T} S_t`. Streaming `B_t` costs `O(p^2)` per time step instead
/// of `O((n - p) p)`.
pub fn q_matrix_direct(data: &RegressionData, alpha: f64, variant: Variant) -> Result<QMatrix> {
    let (n, p) = (data.n(), data.p());
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::Config(format!("burn-in fraction {alpha} outside [0, 1/2)")));
    }
    let qr = QrFactor::new(&data.x)?;
    let (t_lo, t_hi) = window(n, alpha)
        .ok_or_else(|| Error::Dimension(format!("no scan window for n = {n}")))?;
    let resid = qr.residual(&data.y);

    let diag = variant == Variant::Diag;
    let mut stats = Matrix::zeros(t_hi - t_lo + 1, p);
    let mut u = vec![0.0; p];
    let mut s_diag = vec![0.0; p];
    let mut b_sq = vec![0.0; p];
    let mut b = if diag { Matrix::zeros(p, p) } else { Matrix::zeros(0, 0) };
    let mut w = vec![0.0; p];
    let mut bw = vec![0.0; p];
    let mut degenerate = 0;
    let nf = n as f64;

    for t in 1..=t_hi {
        let x = data.x.row(t - 1);
        axpy(2.0 * resid[t - 1], x, &mut u);
        if diag {
            qr.solve_rt(x, &mut w);
            let w_sq = dot(&w, &w);
            bw.iter_mut().for_each(|v| *v = 0.0);
            for (k, &wk) in w.iter().enumerate() {
                if wk != 0.0 {
                    axpy(wk, b.row(k), &mut bw);
                }
            }
            for j in 0..p {
                let xj = x[j];
                s_diag[j] += xj * xj;
                b_sq[j] += 2.0 * xj * bw[j] + xj * xj * w_sq;
            }
            for (k, &wk) in w.iter().enumerate() {
                if wk != 0.0 {
                    axpy(wk, x, b.row_mut(k));
                }
            }
        }
        if t < t_lo {
            continue;
        }
        let out = stats.row_mut(t - t_lo);
        match variant {
            Variant::Diag => {
                for j in 0..p {
                    let dj = 4.0 * (s_diag[j] - b_sq[j]);
                    if dj < DIAG_FLOOR {
                        out[j] = 0.0;
                        degenerate += 1;
                    } else {
                        out[j] = u[j] / dj.sqrt();
                    }
                }
            }
            Variant::Primed => {
                let tf = t as f64;
                let s = (nf / (tf * (nf - tf))).sqrt();
                for (o, uj) in out.iter_mut().zip(&u) {
                    *o = s * uj;
                }
            }
        }
    }

    Ok(QMatrix {
        stats,
        t_lo,
        t_hi,
        variant,
        n,
        degenerate,
    })
}

/// Normal-consistency constant for the median absolute deviation.
pub const MAD_SCALE: f64 = 1.4826;

/// `1.4826 * median(|q - median(q)|)` over all entries of `q`.
pub fn estimate_sigma_mad(q: &QMatrix) -> f64 {
    mad(q.rows().as_slice())
}

pub fn mad(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut buf = values.to_vec();
    let med = median_in_place(&mut buf);
    buf.iter_mut().zip(values).for_each(|(b, v)| *b = (v - med).abs());
    MAD_SCALE * median_in_place(&mut buf)
}

pub(crate) fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let mid = n / 2;
    let (_, &mut upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Deterministic limit of `W_t^T W_z` (a multiple of the identity) for an
/// isotropic Gaussian design.
pub fn g_expected(t: usize, z: usize, n: usize, p: usize) -> f64 {
    let (t, z, n, p) = (t as f64, z as f64, n as f64, p as f64);
    let scale = 4.0 * (n - p) / (n * n);
    if t <= z {
        scale * t * (n - z)
    } else {
        scale * z * (n - t)
    }
}

/// CUSUM-shaped signal curve `g(t; z) sqrt(n / (t (n - t)))`, maximised at
/// `t = z`.
pub fn gamma_oracle(t: usize, z: usize, n: usize, p: usize) -> f64 {
    let (tf, nf) = (t as f64, n as f64);
    g_expected(t, z, n, p) * (nf / (tf * (nf - tf))).sqrt()
}
