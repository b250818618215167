//! Lasso by cyclic coordinate descent for the objective
//! `(1/2m) ||z - W v||^2 + lam ||v||_1`, where `m` is the number of rows of `W`.

use super::matrix::{axpy, dot, Matrix};
use super::threshold::soft_scalar;
use crate::error::{Error, Result};

/// Stop once a full sweep moves no coefficient by more than this.
pub const CD_TOL: f64 = 1e-8;
/// Relative stopping tolerance of [`lasso_gram`].
pub const GRAM_TOL: f64 = 1e-7;
pub const CD_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coef: Vec<f64>,
    pub sweeps: usize,
}

impl LassoFit {
    pub fn support_size(&self) -> usize {
        self.coef.iter().filter(|v| **v != 0.0).count()
    }
}

/// Coordinate descent on the raw design, started from zero.
pub fn lasso_cd(w: &Matrix, z: &[f64], lam: f64) -> Result<LassoFit> {
    let (m, p) = (w.rows(), w.cols());
    if m == 0 || z.len() != m {
        return Err(Error::Dimension(format!(
            "lasso with {m} design rows and {} responses",
            z.len()
        )));
    }
    if !(lam > 0.0) {
        return Err(Error::Config(format!("lasso penalty must be positive, got {lam}")));
    }
    let mf = m as f64;
    let cols: Vec<Vec<f64>> = (0..p).map(|j| w.column(j)).collect();
    let scale: Vec<f64> = cols.iter().map(|c| dot(c, c) / mf).collect();
    let mut coef = vec![0.0; p];
    let mut resid = z.to_vec();

    for sweep in 1..=CD_MAX_SWEEPS {
        let mut max_change = 0.0_f64;
        for j in 0..p {
            if scale[j] == 0.0 {
                continue;
            }
            let old = coef[j];
            let rho = dot(&cols[j], &resid) / mf + scale[j] * old;
            let new = soft_scalar(rho, lam) / scale[j];
            if new != old {
                axpy(old - new, &cols[j], &mut resid);
                coef[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change < CD_TOL {
            return Ok(LassoFit { coef, sweeps: sweep });
        }
    }
    Err(Error::NonConvergence {
        sweeps: CD_MAX_SWEEPS,
        iterate: coef,
    })
}

/// Warm-startable covariance-form solver state: the coefficients and the
/// running product `G * coef`.
#[derive(Debug, Clone)]
pub struct GramState {
    pub coef: Vec<f64>,
    pub g_coef: Vec<f64>,
}

impl GramState {
    pub fn zeros(p: usize) -> Self {
        Self {
            coef: vec![0.0; p],
            g_coef: vec![0.0; p],
        }
    }

    /// State at `coef` for the Gram matrix `gram`.
    pub fn from_coef(gram: &Matrix, coef: &[f64]) -> Self {
        let mut g_coef = vec![0.0; coef.len()];
        for (j, &b) in coef.iter().enumerate() {
            if b != 0.0 {
                axpy(b, gram.row(j), &mut g_coef);
            }
        }
        Self {
            coef: coef.to_vec(),
            g_coef,
        }
    }

    pub fn support_size(&self) -> usize {
        self.coef.iter().filter(|v| **v != 0.0).count()
    }

    /// `||z - W coef||^2` given `||z||^2` and `c = W^T z`.
    pub fn rss(&self, z_sq: f64, c: &[f64]) -> f64 {
        (z_sq - 2.0 * dot(c, &self.coef) + dot(&self.coef, &self.g_coef)).max(0.0)
    }
}

/// Coordinate descent on the covariance form of the same objective, given
/// `G = W^T W`, `c = W^T z`, `||z||^2` and the row count `m`.
///
/// Alternates full cyclic sweeps with sweeps restricted to the current
/// support. It stops after a full sweep in which every coordinate move
/// changes the fitted values by little: `G_jj * delta_j^2 <= GRAM_TOL *
/// ||z||^2`. Sketched designs are often rank deficient, where an absolute
/// tolerance on the coefficients can take very many sweeps to meet. Returns
/// the number of sweeps used.
pub fn lasso_gram(
    gram: &Matrix,
    c: &[f64],
    z_sq: f64,
    m: f64,
    lam: f64,
    state: &mut GramState,
) -> Result<usize> {
    let p = gram.rows();
    let thresh = m * lam;
    let tol = GRAM_TOL * z_sq;
    let mut sweeps = 0;
    let mut active: Vec<usize> = Vec::with_capacity(p);

    let update = |j: usize, state: &mut GramState| -> f64 {
        let d = gram[(j, j)];
        let old = state.coef[j];
        if d <= 0.0 {
            if old != 0.0 {
                axpy(-old, gram.row(j), &mut state.g_coef);
                state.coef[j] = 0.0;
            }
            return 0.0;
        }
        let rho = c[j] - state.g_coef[j] + d * old;
        let new = soft_scalar(rho, thresh) / d;
        if new != old {
            axpy(new - old, gram.row(j), &mut state.g_coef);
            state.coef[j] = new;
        }
        d * (new - old) * (new - old)
    };

    loop {
        sweeps += 1;
        if sweeps > CD_MAX_SWEEPS {
            return Err(Error::NonConvergence {
                sweeps: CD_MAX_SWEEPS,
                iterate: state.coef.clone(),
            });
        }
        let mut max_change = 0.0_f64;
        for j in 0..p {
            max_change = max_change.max(update(j, state));
        }
        if max_change <= tol {
            return Ok(sweeps);
        }

        active.clear();
        active.extend((0..p).filter(|&j| state.coef[j] != 0.0));
        loop {
            sweeps += 1;
            if sweeps > CD_MAX_SWEEPS {
                return Err(Error::NonConvergence {
                    sweeps: CD_MAX_SWEEPS,
                    iterate: state.coef.clone(),
                });
            }
            let mut max_change = 0.0_f64;
            for &j in &active {
                max_change = max_change.max(update(j, state));
            }
            if max_change <= tol {
                break;
            }
        }
    }
}

/// Largest violation of the Lasso KKT conditions at `coef`: for active
/// coordinates `|g_j - lam * sign(coef_j)|`, for inactive ones
/// `max(|g_j| - lam, 0)`, where `g = W^T (z - W coef) / m`.
pub fn kkt_violation(w: &Matrix, z: &[f64], coef: &[f64], lam: f64) -> KktReport {
    let m = w.rows() as f64;
    let fitted = w.matvec(coef);
    let resid: Vec<f64> = z.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let grad = w.t_matvec(&resid);
    let mut report = KktReport::default();
    for (g, &b) in grad.iter().zip(coef) {
        let g = g / m;
        if b != 0.0 {
            report.active = report.active.max((g - lam * b.signum()).abs());
        } else {
            report.inactive = report.inactive.max(g.abs() - lam);
        }
    }
    report
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KktReport {
    /// Max `|g_j - lam sign(coef_j)|` over the support.
    pub active: f64,
    /// Max `|g_j| - lam` off the support (non-positive when satisfied).
    pub inactive: f64,
}

impl KktReport {
    pub fn satisfied(&self, lam: f64, tol: f64) -> bool {
        self.active <= tol * lam.max(1.0) && self.inactive <= tol
    }
}

/// `(1/2m) ||z - W v||^2 + lam ||v||_1`.
pub fn lasso_objective(w: &Matrix, z: &[f64], coef: &[f64], lam: f64) -> f64 {
    let fitted = w.matvec(coef);
    let rss: f64 = z.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    rss / (2.0 * w.rows() as f64) + lam * coef.iter().map(|v| v.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_design_closed_form() {
        let w = Matrix::identity(2);
        let fit = lasso_cd(&w, &[3.0, 0.1], 1.0).unwrap();
        assert!((fit.coef[0] - 1.0).abs() < 1e-12);
        assert_eq!(fit.coef[1], 0.0);
    }

    #[test]
    fn large_penalty_gives_zero() {
        let w = Matrix::from_fn(6, 3, |i, j| ((i + 2 * j) % 4) as f64 - 1.5);
        let z = [1.0, -2.0, 0.5, 0.0, 3.0, -1.0];
        let lam_max = w
            .t_matvec(&z)
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            / 6.0;
        let fit = lasso_cd(&w, &z, lam_max).unwrap();
        assert!(fit.coef.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_penalty() {
        assert!(matches!(
            lasso_cd(&Matrix::identity(2), &[1.0, 1.0], 0.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn gram_form_matches_raw_form() {
        let w = Matrix::from_fn(12, 5, |i, j| ((i * 5 + j * 3) % 7) as f64 - 3.0 + 0.1 * j as f64);
        let z: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
        let g = w.t_matmul(&w);
        let c = w.t_matvec(&z);
        for lam in [0.05, 0.3, 1.0] {
            let raw = lasso_cd(&w, &z, lam).unwrap();
            let mut st = GramState::zeros(5);
            lasso_gram(&g, &c, dot(&z, &z), 12.0, lam, &mut st).unwrap();
            let (f_raw, f_gram) = (
                lasso_objective(&w, &z, &raw.coef, lam),
                lasso_objective(&w, &z, &st.coef, lam),
            );
            assert!((f_raw - f_gram).abs() < 1e-6 * f_raw, "{f_raw} vs {f_gram}");
            let z_sq = dot(&z, &z);
            let rss_direct = 2.0 * 12.0 * (lasso_objective(&w, &z, &st.coef, 0.0));
            assert!((st.rss(z_sq, &c) - rss_direct).abs() < 1e-8 * (1.0 + rss_direct));
        }
    }
}
