//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use charcoal::linalg::{complement_basis, dot, Matrix};
use charcoal::sketch::{window, RegressionData, Variant};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vec(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn random_data(n: usize, p: usize, rng: &mut impl Rng) -> RegressionData {
    let x = gaussian_matrix(n, p, rng);
    let y = gaussian_vec(n, rng);
    RegressionData::new(x, y).unwrap()
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut m = a.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap();
        for k in 0..n {
            let (a1, a2) = (m[(col, k)], m[(piv, k)]);
            m[(col, k)] = a2;
            m[(piv, k)] = a1;
            let (b1, b2) = (inv[(col, k)], inv[(piv, k)]);
            inv[(col, k)] = b2;
            inv[(piv, k)] = b1;
        }
        let d = m[(col, col)];
        for k in 0..n {
            m[(col, k)] /= d;
            inv[(col, k)] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = m[(i, col)];
                for k in 0..n {
                    m[(i, k)] -= f * m[(col, k)];
                    inv[(i, k)] -= f * inv[(col, k)];
                }
            }
        }
    }
    inv
}

/// `X_{(lo,hi]}^T X_{(lo,hi]}`.
pub fn partial_gram(x: &Matrix, lo: usize, hi: usize) -> Matrix {
    let s = x.row_range(lo, hi);
    s.t_matmul(&s)
}

/// `W_t = 2 A_{(0,t]}^T X_{(0,t]}` materialised from a complement basis.
pub fn materialise_w(a: &Matrix, x: &Matrix, t: usize) -> Matrix {
    let mut w = a.row_range(0, t).t_matmul(&x.row_range(0, t));
    w.scale(2.0);
    w
}

/// `Q_t` for every window time point, recomputed from scratch with the
/// given complement basis.
pub fn naive_q(data: &RegressionData, basis: &Matrix, alpha: f64, variant: Variant) -> Vec<Vec<f64>> {
    let n = data.n();
    let z = basis.t_matvec(&data.y);
    let (lo, hi) = window(n, alpha).unwrap();
    (lo..=hi)
        .map(|t| {
            let w = materialise_w(basis, &data.x, t);
            let u = w.t_matvec(&z);
            match variant {
                Variant::Diag => (0..w.cols())
                    .map(|j| {
                        let c = w.column(j);
                        let d = dot(&c, &c);
                        if d < 1e-12 {
                            0.0
                        } else {
                            u[j] / d.sqrt()
                        }
                    })
                    .collect(),
                Variant::Primed => {
                    let (tf, nf) = (t as f64, n as f64);
                    let s = (nf / (tf * (nf - tf))).sqrt();
                    u.iter().map(|v| s * v).collect()
                }
            }
        })
        .collect()
}

pub fn naive_q_default(data: &RegressionData, alpha: f64, variant: Variant) -> Vec<Vec<f64>> {
    naive_q(data, &complement_basis(&data.x).unwrap(), alpha, variant)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and eigenvectors (as columns).
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[(i, i)]).collect(), v)
}

/// Leading left singular vector via the full eigen-decomposition of `M M^T`.
pub fn brute_left_singular(m: &Matrix) -> Vec<f64> {
    let mmt = m.matmul(&m.transpose());
    let (vals, vecs) = jacobi_eigen(&mmt);
    let top = (0..vals.len()).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    vecs.column(top)
}

/// Angle between two lines through the origin.
pub fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let c = dot(a, b).abs() / (dot(a, a) * dot(b, b)).sqrt();
    c.min(1.0).acos()
}

/// Accelerated proximal gradient for `(1/2m)||z - W v||^2 + lam ||v||_1`.
pub fn prox_gradient_lasso(w: &Matrix, z: &[f64], lam: f64) -> Vec<f64> {
    let (m, p) = (w.rows() as f64, w.cols());
    let g = w.t_matmul(w);
    let (vals, _) = jacobi_eigen(&g);
    let step = m / vals.iter().copied().fold(0.0, f64::max);
    let c = w.t_matvec(z);
    let mut x = vec![0.0; p];
    let mut y = x.clone();
    let mut t = 1.0_f64;
    for _ in 0..200_000 {
        let gy = g.matvec(&y);
        let next: Vec<f64> = (0..p)
            .map(|j| {
                let v = y[j] - step * (gy[j] - c[j]) / m;
                v.signum() * (v.abs() - step * lam).max(0.0)
            })
            .collect();
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let moved: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        y = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        x = next;
        t = t_next;
        if moved < 1e-14 {
            break;
        }
    }
    x
}

/// Segment label of every time point given sorted changepoints.
pub fn labels(cps: &[usize], n: usize) -> Vec<usize> {
    (1..=n).map(|t| cps.iter().filter(|&&c| c < t).count()).collect()
}

/// Adjusted Rand index by explicit enumeration of all pairs.
pub fn brute_ari(a: &[usize], b: &[usize], n: usize) -> f64 {
    let (la, lb) = (labels(a, n), labels(b, n));
    let (mut both, mut only_a, mut only_b, mut neither) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (la[i] == la[j], lb[i] == lb[j]) {
                (true, true) => both += 1.0,
                (true, false) => only_a += 1.0,
                (false, true) => only_b += 1.0,
                (false, false) => neither += 1.0,
            }
        }
    }
    let total = both + only_a + only_b + neither;
    let (sa, sb) = (both + only_a, both + only_b);
    let expected = sa * sb / total;
    let max_index = 0.5 * (sa + sb);
    if max_index == expected {
        return if la == lb { 1.0 } else { 0.0 };
    }
    (both - expected) / (max_index - expected)
}
