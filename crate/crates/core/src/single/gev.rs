//! Generalised extreme value distribution fitted by L-moments.
//!
//! Parametrisation: quantile `q(u) = mu + sigma ((-ln u)^(-xi) - 1) / xi`,
//! reducing to the Gumbel `mu - sigma ln(-ln u)` as `xi -> 0`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Below this `|xi|` the Gumbel limit is used.
const GUMBEL_EPS: f64 = 1e-8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
}

impl GevParams {
    pub fn quantile(&self, u: f64) -> f64 {
        let y = -u.ln();
        if self.shape.abs() < GUMBEL_EPS {
            self.location - self.scale * y.ln()
        } else {
            self.location + self.scale * (y.powf(-self.shape) - 1.0) / self.shape
        }
    }

    /// Value exceeded with probability `level`.
    pub fn upper_quantile(&self, level: f64) -> f64 {
        self.quantile(1.0 - level)
    }
}

/// L-skewness of a GEV with Hosking shape `k` (`k = -xi`).
fn tau3_of(k: f64) -> f64 {
    let (l2, l3) = (std::f64::consts::LN_2, 3f64.ln());
    if k.abs() < 1e-7 {
        // Series about the Gumbel point.
        return 2.0 * l3 / l2 - 3.0 - k * l3 * (l3 - l2) / l2;
    }
    2.0 * (-k * l3).exp_m1() / (-k * l2).exp_m1() - 3.0
}

/// Fits location, scale and shape from the first three sample L-moments.
pub fn fit_gev(samples: &[f64]) -> Result<GevParams> {
    let n = samples.len();
    if n < 20 {
        return Err(Error::Config(format!("GEV fit needs at least 20 samples, got {n}")));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    if x[0] == x[n - 1] || !x[0].is_finite() || !x[n - 1].is_finite() {
        return Err(Error::Degenerate("GEV fit on a constant or non-finite sample".into()));
    }

    // Unbiased probability-weighted moments.
    let nf = n as f64;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let i = i as f64;
        b0 += v;
        b1 += v * i / (nf - 1.0);
        b2 += v * i * (i - 1.0) / ((nf - 1.0) * (nf - 2.0));
    }
    b0 /= nf;
    b1 /= nf;
    b2 /= nf;
    let l1 = b0;
    let l2 = 2.0 * b1 - b0;
    let l3 = 6.0 * b2 - 6.0 * b1 + b0;
    if !(l2 > 0.0) {
        return Err(Error::Degenerate("non-positive second L-moment".into()));
    }
    let t3 = l3 / l2;

    // Hosking's rational start, then Newton on tau3(k) = t3.
    let c = 2.0 / (3.0 + t3) - std::f64::consts::LN_2 / 3f64.ln();
    let mut k = 7.8590 * c + 2.9554 * c * c;
    for _ in 0..50 {
        let f = tau3_of(k) - t3;
        let h = 1e-6 * (1.0 + k.abs());
        let df = (tau3_of(k + h) - tau3_of(k - h)) / (2.0 * h);
        if !df.is_finite() || df == 0.0 {
            break;
        }
        let step = f / df;
        k -= step;
        if step.abs() < 1e-12 {
            break;
        }
    }
    if !k.is_finite() || k <= -1.0 {
        return Err(Error::Degenerate(format!("GEV shape estimate out of range (k = {k})")));
    }

    let (scale, location) = if k.abs() < GUMBEL_EPS {
        let scale = l2 / std::f64::consts::LN_2;
        (scale, l1 - EULER_GAMMA * scale)
    } else {
        let g = gamma(1.0 + k);
        let scale = l2 * k / ((1.0 - 2f64.powf(-k)) * g);
        (scale, l1 - scale * (1.0 - g) / k)
    };
    if !(scale > 0.0) || !location.is_finite() {
        return Err(Error::Degenerate("GEV scale estimate not positive".into()));
    }
    Ok(GevParams {
        location,
        scale,
        shape: -k,
    })
}
