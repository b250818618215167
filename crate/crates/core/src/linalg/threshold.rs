/// Entrywise soft thresholding: `sign(v) * max(|v| - lam, 0)`.
#[inline]
pub fn soft_scalar(v: f64, lam: f64) -> f64 {
    if v > lam {
        v - lam
    } else if v < -lam {
        v + lam
    } else {
        0.0
    }
}

/// Entrywise hard thresholding: keeps `v` iff `|v| >= lam`.
#[inline]
pub fn hard_scalar(v: f64, lam: f64) -> f64 {
    if v.abs() >= lam {
        v
    } else {
        0.0
    }
}

pub fn soft_threshold(v: &[f64], lam: f64) -> Vec<f64> {
    v.iter().map(|&e| soft_scalar(e, lam)).collect()
}

pub fn hard_threshold(v: &[f64], lam: f64) -> Vec<f64> {
    v.iter().map(|&e| hard_scalar(e, lam)).collect()
}

/// `||soft(v, lam)||_2` without allocating.
pub fn soft_norm(v: &[f64], lam: f64) -> f64 {
    v.iter()
        .map(|&e| soft_scalar(e, lam).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `||hard(v, lam)||_2` without allocating.
pub fn hard_norm(v: &[f64], lam: f64) -> f64 {
    v.iter()
        .map(|&e| hard_scalar(e, lam).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalar_cases() {
        assert_eq!(soft_threshold(&[3.0, -3.0, 0.5], 1.0), vec![2.0, -2.0, 0.0]);
        assert_eq!(hard_threshold(&[3.0, 0.5, -1.0], 1.0), vec![3.0, 0.0, -1.0]);
    }

    proptest! {
        #[test]
        fn zero_level_is_identity(v in prop::collection::vec(-1e3f64..1e3, 0..20)) {
            prop_assert_eq!(soft_threshold(&v, 0.0), v.clone());
            prop_assert_eq!(hard_threshold(&v, 0.0), v);
        }

        #[test]
        fn soft_is_monotone_in_level(
            v in prop::collection::vec(-10f64..10.0, 1..20),
            l1 in 0f64..5.0,
            dl in 0f64..5.0,
        ) {
            let a = soft_threshold(&v, l1);
            let b = soft_threshold(&v, l1 + dl);
            for ((x, y), orig) in a.iter().zip(&b).zip(&v) {
                prop_assert!(y.abs() <= x.abs());
                prop_assert!(x.abs() <= orig.abs());
                prop_assert!(*y == 0.0 || y.signum() == orig.signum());
            }
            prop_assert!((soft_norm(&v, l1) - crate::linalg::norm2(&a)).abs() < 1e-12);
        }
    }
}
