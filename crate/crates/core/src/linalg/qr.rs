//! Householder QR: an orthonormal basis of the orthogonal complement of a
//! design's column space, and the thin factor used to work with the
//! projection onto that complement without forming the basis.

use super::matrix::{axpy, dot, Matrix};
use crate::error::{Error, Result};

/// Relative size below which an `R` diagonal entry marks rank deficiency.
pub const RANK_TOL: f64 = 1e-10;

struct Householder {
    /// Reflector vectors, normalised so that their leading entry is 1. The
    /// `k`-th vector lives on rows `k..n`.
    vectors: Vec<Vec<f64>>,
    taus: Vec<f64>,
    r_diag: Vec<f64>,
    /// Upper-triangular `R` (`p x p`).
    r: Matrix,
}

/// Column-major Householder factorisation of an `n x p` matrix with the
/// reflectors chosen so that `R` has a non-negative diagonal.
fn householder(x: &Matrix) -> Householder {
    let (n, p) = (x.rows(), x.cols());
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    let mut vectors = Vec::with_capacity(p);
    let mut taus = Vec::with_capacity(p);
    let mut r_diag = Vec::with_capacity(p);

    for k in 0..p {
        let head = cols[k][k];
        let tail = &cols[k][k + 1..n];
        let sigma = dot(tail, tail);
        let norm = (head * head + sigma).sqrt();

        let mut v = cols[k][k..n].to_vec();
        let tau = if sigma == 0.0 && head >= 0.0 {
            0.0
        } else {
            // Maps the column onto +norm * e_1 without cancellation.
            let v0 = if head <= 0.0 {
                head - norm
            } else {
                -sigma / (head + norm)
            };
            let tau = 2.0 * v0 * v0 / (sigma + v0 * v0);
            v.iter_mut().for_each(|e| *e /= v0);
            tau
        };
        v[0] = 1.0;

        if tau != 0.0 {
            for col in cols.iter_mut().skip(k + 1) {
                let seg = &mut col[k..n];
                let w = dot(&v, seg);
                axpy(-tau * w, &v, seg);
            }
        }
        r_diag.push(norm);
        vectors.push(v);
        taus.push(tau);
    }

    let mut r = Matrix::zeros(p, p);
    for (j, col) in cols.iter().enumerate() {
        for k in 0..j {
            r[(k, j)] = col[k];
        }
        r[(j, j)] = r_diag[j];
    }
    Householder {
        vectors,
        taus,
        r_diag,
        r,
    }
}

fn full_rank_householder(x: &Matrix) -> Result<Householder> {
    let (n, p) = (x.rows(), x.cols());
    if n <= p {
        return Err(Error::Dimension(format!(
            "complement basis needs more rows than columns (n = {n}, p = {p})"
        )));
    }
    let hh = householder(x);
    let r_max = hh.r_diag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for (k, &r) in hh.r_diag.iter().enumerate() {
        if !(r.abs() >= RANK_TOL * r_max) || r_max == 0.0 {
            return Err(Error::RankDeficient {
                column: k,
                value: r,
            });
        }
    }
    Ok(hh)
}

/// Thin QR factorisation `X = Q R` of a full-column-rank design with
/// `n > p`, `R` having a positive diagonal.
pub struct QrFactor {
    hh: Householder,
    /// `R^T`, row-major, for forward substitution.
    rt: Matrix,
    n: usize,
}

impl QrFactor {
    pub fn new(x: &Matrix) -> Result<Self> {
        let hh = full_rank_householder(x)?;
        let rt = hh.r.transpose();
        Ok(Self { hh, rt, n: x.rows() })
    }

    pub fn r(&self) -> &Matrix {
        &self.hh.r
    }

    /// `(I - X (X^T X)^{-1} X^T) y`, the least-squares residual of `y`.
    pub fn residual(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n, "residual of a vector of the wrong length");
        let mut v = y.to_vec();
        let reflect = |k: usize, v: &mut [f64]| {
            let tau = self.hh.taus[k];
            if tau != 0.0 {
                let h = &self.hh.vectors[k];
                let seg = &mut v[k..];
                let w = dot(h, seg);
                axpy(-tau * w, h, seg);
            }
        };
        let p = self.hh.taus.len();
        (0..p).for_each(|k| reflect(k, &mut v));
        v[..p].iter_mut().for_each(|e| *e = 0.0);
        (0..p).rev().for_each(|k| reflect(k, &mut v));
        v
    }

    /// Solves `R^T w = b` by forward substitution.
    pub fn solve_rt(&self, b: &[f64], w: &mut [f64]) {
        for i in 0..b.len() {
            let row = self.rt.row(i);
            w[i] = (b[i] - dot(&row[..i], &w[..i])) / row[i];
        }
    }
}

/// Orthonormal basis `A` (`n x (n-p)`) of the orthogonal complement of the
/// column space of `x`.
///
/// `A` is the trailing `n - p` columns of the orthogonal factor of a full
/// Householder QR of `x` whose `R` has a non-negative diagonal, so it is a
/// deterministic function of `x`.
pub fn complement_basis(x: &Matrix) -> Result<Matrix> {
    let (n, p) = (x.rows(), x.cols());
    let hh = full_rank_householder(x)?;

    let m = n - p;
    // Columns of Q[:, p..n] = H_0 H_1 ... H_{p-1} [0; I_m], stored column-major.
    let mut basis: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[p + j] = 1.0;
            e
        })
        .collect();
    for k in (0..p).rev() {
        let tau = hh.taus[k];
        if tau == 0.0 {
            continue;
        }
        let v = &hh.vectors[k];
        for col in basis.iter_mut() {
            let seg = &mut col[k..n];
            let w = dot(v, seg);
            if w != 0.0 {
                axpy(-tau * w, v, seg);
            }
        }
    }

    let mut a = Matrix::zeros(n, m);
    for (j, col) in basis.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    Ok(a)
}
