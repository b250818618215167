use rand_distr::{Distribution, StandardNormal};

use super::matrix::{dot, norm2, Matrix};
use crate::error::{Error, Result};
use crate::rng;

pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 1000;

#[derive(Debug, Clone)]
pub struct SingularVector {
    /// Unit vector, sign-normalised so its largest-magnitude entry is positive.
    pub vector: Vec<f64>,
    /// Leading eigenvalue of `M M^T`, i.e. the squared top singular value.
    pub rayleigh: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Leading left singular vector of `m` by power iteration on `M M^T`.
///
/// Starts from a seeded Gaussian vector and stops once the eigen-residual
/// `||M M^T v - r v||` falls below `POWER_TOL * r`, where `r` is the Rayleigh
/// quotient. If the iteration cap is hit the last iterate is returned with
/// `converged == false`.
pub fn leading_left_singular_vector(m: &Matrix, seed: u64) -> Result<SingularVector> {
    if m.max_abs() == 0.0 {
        return Err(Error::Degenerate(
            "leading singular vector of an all-zero matrix".into(),
        ));
    }
    let mut rng = rng::from_seed(seed);
    let mut v: Vec<f64> = (0..m.rows()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|e| *e /= nv);

    let mut rayleigh = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < POWER_MAX_ITER {
        iterations += 1;
        let w = m.t_matvec(&v);
        let mut u = m.matvec(&w);
        rayleigh = dot(&v, &u);
        let un = norm2(&u);
        if un == 0.0 {
            // Start vector orthogonal to the row space: restart along e_i with
            // the largest row norm.
            let best = (0..m.rows())
                .max_by(|&a, &b| norm2(m.row(a)).total_cmp(&norm2(m.row(b))))
                .unwrap_or(0);
            v.iter_mut().for_each(|e| *e = 0.0);
            v[best] = 1.0;
            continue;
        }
        let residual = u
            .iter()
            .zip(&v)
            .map(|(ui, vi)| (ui - rayleigh * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        u.iter_mut().for_each(|e| *e /= un);
        v = u;
        if residual <= POWER_TOL * rayleigh {
            converged = true;
            break;
        }
    }
    normalize_sign(&mut v);
    Ok(SingularVector {
        vector: v,
        rayleigh,
        iterations,
        converged,
    })
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, e) in v.iter().enumerate() {
        if e.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&e| e < 0.0) {
        v.iter_mut().for_each(|e| *e = -*e);
    }
}
