//! Multiple changepoints by narrowest-over-threshold segmentation.
//!
//! Random intervals are tested for a change; among those that reject inside
//! the current segment, the narrowest one is split at its single-change
//! estimate and both halves are searched again. Afterwards each candidate is
//! re-tested on the span between its neighbours (pruning) and relocated twice
//! with the Lasso-BIC estimator on progressively wider neighbourhoods.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::single::{
    charcoal_proj, estimate_lasso_bic, standardized_h_max, LambdaRule, LassoLambda, ScanConfig,
};
use crate::sketch::{RegressionData, Variant};

/// The time points `(s, e]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub s: usize,
    pub e: usize,
}

impl Interval {
    pub fn len(&self) -> usize {
        self.e - self.s
    }

    pub fn is_empty(&self) -> bool {
        self.e == self.s
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.s <= other.s && other.e <= self.e
    }
}

/// `count` intervals with endpoints drawn uniformly from the pairs
/// `0 <= s < e <= n`.
pub fn generate_intervals(n: usize, count: usize, seed: u64) -> Vec<Interval> {
    assert!(n >= 2, "need at least two time points");
    let mut rng = rng::from_seed(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(0..=n);
        let b = rng.random_range(0..=n);
        if a != b {
            out.push(Interval {
                s: a.min(b),
                e: a.max(b),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiConfig {
    /// Number of random intervals `M`.
    pub intervals: usize,
    /// Fraction of `n` trimmed from both ends of an interval before testing.
    pub varpi: f64,
    /// Burn-in of the single-change scans and of the final refinement.
    pub alpha: f64,
    /// `lam = lam_coef * sigma * ln p`.
    pub lam_coef: f64,
    /// Rejection threshold for the standardised statistic `H_max / sigma`.
    pub threshold: Option<f64>,
    /// Calibration level used when the threshold is derived; `0.01 / M` when
    /// absent.
    pub level: Option<f64>,
    /// Known noise level; estimated per interval when absent.
    pub sigma: Option<f64>,
    pub seed: u64,
}

impl Default for MultiConfig {
    fn default() -> Self {
        Self {
            intervals: 200,
            varpi: 0.0,
            alpha: 0.05,
            lam_coef: 0.5,
            threshold: None,
            level: None,
            sigma: None,
            seed: 0,
        }
    }
}

impl MultiConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.intervals >= 1
            && (0.0..0.5).contains(&self.varpi)
            && (0.0..0.5).contains(&self.alpha)
            && self.lam_coef >= 0.0
            && self.threshold.is_none_or(|t| t > 0.0)
            && self.level.is_none_or(|l| l > 0.0 && l < 1.0)
            && self.sigma.is_none_or(|s| s > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid multi-change settings {self:?}")))
        }
    }
}

/// Outcome of a test on one data segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub reject: bool,
    pub statistic: f64,
}

impl Verdict {
    pub const ACCEPT: Verdict = Verdict {
        reject: false,
        statistic: 0.0,
    };
}

/// Where a raw candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub location: usize,
    pub interval: Interval,
    pub interval_index: usize,
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NotOutput {
    /// Sorted by location.
    pub candidates: Vec<Candidate>,
    /// Segments examined by the recursion, in visiting order.
    pub segments: Vec<Interval>,
    /// Intervals tested against each segment.
    pub tested: Vec<(Interval, Interval)>,
}

/// Narrowest-over-threshold recursion on `(0, n]`.
///
/// `test` sees the interval trimmed by `floor(n varpi)` at both ends;
/// intervals no longer than `p` after trimming are never tested. `estimate`
/// sees the whole interval and returns a location relative to its start;
/// values outside `(0, len)` disqualify the interval.
pub fn not_segment<E, P>(
    data: &RegressionData,
    intervals: &[Interval],
    varpi: f64,
    estimate: E,
    test: P,
) -> NotOutput
where
    E: Fn(&RegressionData, usize) -> usize,
    P: Fn(&RegressionData) -> Verdict + Sync,
{
    let (n, p) = (data.n(), data.p());
    let trim = (n as f64 * varpi + 1e-9).floor() as usize;
    // Every interval lies in (0, n], so the root call tests all of them.
    let verdicts: Vec<Verdict> = intervals
        .par_iter()
        .map(|iv| {
            if iv.len() <= 2 * trim || iv.len() - 2 * trim <= p {
                Verdict::ACCEPT
            } else {
                test(&data.slice(iv.s + trim, iv.e - trim))
            }
        })
        .collect();

    let mut out = NotOutput {
        candidates: Vec::new(),
        segments: Vec::new(),
        tested: Vec::new(),
    };
    let mut disqualified = vec![false; intervals.len()];
    let mut stack = vec![Interval { s: 0, e: n }];
    while let Some(seg) = stack.pop() {
        out.segments.push(seg);
        loop {
            let mut best: Option<usize> = None;
            for (m, iv) in intervals.iter().enumerate() {
                if !seg.contains(iv) || !verdicts[m].reject || disqualified[m] {
                    continue;
                }
                out.tested.push((seg, *iv));
                if best.is_none_or(|b| iv.len() < intervals[b].len()) {
                    best = Some(m);
                }
            }
            let Some(m0) = best else { break };
            let iv = intervals[m0];
            let offset = estimate(&data.slice(iv.s, iv.e), m0);
            if offset == 0 || offset >= iv.len() {
                disqualified[m0] = true;
                continue;
            }
            let b = iv.s + offset;
            out.candidates.push(Candidate {
                location: b,
                interval: iv,
                interval_index: m0,
                statistic: verdicts[m0].statistic,
            });
            // Right half is pushed first so the left half is visited first.
            stack.push(Interval { s: b, e: seg.e });
            stack.push(Interval { s: seg.s, e: b });
            break;
        }
    }
    out.candidates.sort_by_key(|c| c.location);
    out
}

/// Re-tests each candidate on the span between its surviving neighbours,
/// scanning left to right, and drops those that no longer reject.
pub fn prune_candidates<P>(data: &RegressionData, candidates: &[usize], test: P) -> Vec<usize>
where
    P: Fn(&RegressionData) -> Verdict,
{
    let n = data.n();
    let mut kept: Vec<usize> = Vec::with_capacity(candidates.len());
    for (i, &c) in candidates.iter().enumerate() {
        let left = kept.last().copied().unwrap_or(0);
        let right = candidates.get(i + 1).copied().unwrap_or(n);
        if right > left && test(&data.slice(left, right)).reject {
            kept.push(c);
        }
    }
    kept
}

/// Relocates candidate `i` within `(lo_i, hi_i]`; infeasible slices, or
/// estimators that fail, leave the candidate where it was.
fn refine_on<E>(data: &RegressionData, current: &[usize], slices: &[(usize, usize)], estimate: E) -> Vec<usize>
where
    E: Fn(&RegressionData, usize) -> Option<usize> + Sync,
{
    let p = data.p();
    let mut out: Vec<usize> = slices
        .par_iter()
        .zip(current)
        .enumerate()
        .map(|(i, (&(lo, hi), &c))| {
            if hi <= lo || hi - lo <= p + 1 {
                return c;
            }
            match estimate(&data.slice(lo, hi), i) {
                Some(off) if off > 0 && off < hi - lo => lo + off,
                _ => c,
            }
        })
        .collect();
    out.sort_unstable();
    out
}

fn neighbours(points: &[usize], n: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
    (0..points.len()).map(move |i| {
        let prev = if i == 0 { 0 } else { points[i - 1] };
        let next = points.get(i + 1).copied().unwrap_or(n);
        (prev, points[i], next)
    })
}

/// First refinement on `((z_{i-1} + z_i) / 2, (z_i + z_{i+1}) / 2]`.
pub fn refine_midpoint<E>(data: &RegressionData, candidates: &[usize], estimate: E) -> Vec<usize>
where
    E: Fn(&RegressionData, usize) -> Option<usize> + Sync,
{
    let slices: Vec<(usize, usize)> = neighbours(candidates, data.n())
        .map(|(prev, c, next)| ((prev + c) / 2, (c + next) / 2))
        .collect();
    refine_on(data, candidates, &slices, estimate)
}

/// Second refinement on `(z_{i-1} + floor(alpha n), z_{i+1} - floor(alpha n)]`.
pub fn refine_full<E>(data: &RegressionData, candidates: &[usize], alpha: f64, estimate: E) -> Vec<usize>
where
    E: Fn(&RegressionData, usize) -> Option<usize> + Sync,
{
    let n = data.n();
    let margin = (alpha * n as f64 + 1e-9).floor() as usize;
    let slices: Vec<(usize, usize)> = neighbours(candidates, n)
        .map(|(prev, _, next)| (prev + margin, next.saturating_sub(margin)))
        .collect();
    refine_on(data, candidates, &slices, estimate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiResult {
    pub raw: Vec<usize>,
    pub pruned: Vec<usize>,
    pub refined: Vec<usize>,
    pub per_candidate: Vec<Candidate>,
    pub threshold: f64,
}

/// Full pipeline: intervals, recursion, pruning and both refinements.
///
/// The test is `H_max / sigma >= threshold` from the projection scan, the
/// recursion splits at the projection estimate and both refinements use
/// Lasso-BIC with cross-validated penalties.
pub fn detect_multiple(data: &RegressionData, cfg: &MultiConfig) -> Result<MultiResult> {
    cfg.validate()?;
    let threshold = cfg.threshold.ok_or_else(|| {
        Error::Config("multi-change detection needs a calibrated threshold".into())
    })?;
    let n = data.n();
    if n < 2 {
        return Err(Error::Dimension(format!("need at least two time points, got {n}")));
    }
    let intervals = generate_intervals(n, cfg.intervals, rng::derive_seed(cfg.seed, 0));

    let test = |d: &RegressionData| match standardized_h_max(d, cfg.alpha, cfg.lam_coef, cfg.sigma) {
        Some(h) => Verdict {
            reject: h >= threshold,
            statistic: h,
        },
        None => Verdict::ACCEPT,
    };
    let scan = ScanConfig {
        alpha: cfg.alpha,
        lambda: match cfg.sigma {
            Some(sigma) => LambdaRule::Scaled {
                coef: cfg.lam_coef,
                sigma: Some(sigma),
            },
            None => LambdaRule::mad(cfg.lam_coef),
        },
        variant: Variant::Diag,
        seed: rng::derive_seed(cfg.seed, 1),
    };
    let split = |d: &RegressionData, _m: usize| {
        charcoal_proj(d, &scan).map_or(0, |o| o.estimate.location)
    };
    let lasso = |stage: u64| {
        move |d: &RegressionData, i: usize| {
            let folds = rng::derive_seed(cfg.seed, (stage << 32) | i as u64);
            estimate_lasso_bic(d, cfg.alpha, &LassoLambda::cv(folds))
                .ok()
                .map(|e| e.location)
        }
    };

    let found = not_segment(data, &intervals, cfg.varpi, split, test);
    let raw: Vec<usize> = found.candidates.iter().map(|c| c.location).collect();
    let pruned = prune_candidates(data, &raw, test);
    let once = refine_midpoint(data, &pruned, lasso(2));
    let refined = refine_full(data, &once, cfg.alpha, lasso(3));
    Ok(MultiResult {
        raw,
        pruned,
        refined,
        per_candidate: found.candidates,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn toy(n: usize) -> RegressionData {
        RegressionData::new(Matrix::from_fn(n, 1, |i, _| (i as f64).sin() + 2.0), vec![0.0; n]).unwrap()
    }

    #[test]
    fn intervals_are_ordered_and_bounded() {
        let ivs = generate_intervals(100, 500, 3);
        assert_eq!(ivs.len(), 500);
        assert!(ivs.iter().all(|iv| iv.s < iv.e && iv.e <= 100));
        assert_eq!(ivs, generate_intervals(100, 500, 3));
    }

    #[test]
    fn no_rejection_no_candidates() {
        let data = toy(50);
        let ivs = generate_intervals(50, 30, 1);
        let out = not_segment(&data, &ivs, 0.0, |_, _| 1, |_| Verdict::ACCEPT);
        assert!(out.candidates.is_empty());
        assert_eq!(out.segments, vec![Interval { s: 0, e: 50 }]);
    }

    #[test]
    fn recursion_splits_at_planted_changes() {
        // The test rejects any segment straddling 20 or 35; the estimator
        // returns the first straddled change.
        let data = toy(60);
        let marker: Vec<f64> = (0..60).map(|i| i as f64).collect();
        let data = RegressionData::new(data.x.clone(), marker).unwrap();
        let cuts = [20.0, 35.0];
        let straddled = |d: &RegressionData| {
            let (lo, hi) = (d.y[0], d.y[d.n() - 1] + 1.0);
            cuts.iter().copied().find(|&c| lo < c && c < hi).map(|c| (c - lo) as usize)
        };
        let test = |d: &RegressionData| Verdict {
            reject: straddled(d).is_some(),
            statistic: 1.0,
        };
        let ivs = generate_intervals(60, 200, 7);
        let out = not_segment(&data, &ivs, 0.0, |d, _| straddled(d).unwrap_or(0), test);
        let locs: Vec<usize> = out.candidates.iter().map(|c| c.location).collect();
        assert_eq!(locs, vec![20, 35]);
        for c in &out.candidates {
            assert!(c.interval.s < c.location && c.location < c.interval.e);
        }
        // Every tested interval sits inside the segment it was tested for.
        assert!(out.tested.iter().all(|(seg, iv)| seg.contains(iv)));
    }

    #[test]
    fn pruning_uses_surviving_neighbours() {
        let base = toy(100);
        let data = RegressionData::new(base.x, (0..100).map(|i| i as f64).collect()).unwrap();
        // Only (0, _] and (30, 100] reject. 40 is tested on (30, 70] and
        // dropped, so 70 is tested on (30, 100] rather than (40, 100].
        let test = |d: &RegressionData| Verdict {
            reject: d.y[0] == 0.0 || (d.y[0] == 30.0 && d.n() == 70),
            statistic: 0.0,
        };
        assert_eq!(prune_candidates(&data, &[], test), Vec::<usize>::new());
        assert_eq!(prune_candidates(&data, &[30, 40, 70], test), vec![30, 70]);
    }

    #[test]
    fn midpoint_slices() {
        let data = toy(100);
        let seen = std::sync::Mutex::new(Vec::new());
        let out = refine_midpoint(&data, &[40], |d, _| {
            seen.lock().unwrap().push(d.n());
            Some(3)
        });
        assert_eq!(seen.into_inner().unwrap(), vec![50]);
        assert_eq!(out, vec![23]);
    }

    #[test]
    fn infeasible_slices_pass_through() {
        let data = RegressionData::new(Matrix::from_fn(30, 20, |i, j| ((i * j) as f64).cos()), vec![0.0; 30]).unwrap();
        let out = refine_midpoint(&data, &[10, 20], |_, _| Some(1));
        assert_eq!(out, vec![10, 20]);
        let out = refine_full(&data, &[15], 0.45, |_, _| Some(1));
        assert_eq!(out, vec![15]);
    }
}
