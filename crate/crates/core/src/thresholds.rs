//! Deterministic thresholds and the interval they certify.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Default absolute tolerance for the balanced-surplus root.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

const MAX_ITERATIONS: usize = 200;

/// Tolerance on `p(median) = 1/2` for the exactness flag.
pub const MEDIAN_EXACT_TOLERANCE: f64 = 1e-12;

/// The three named thresholds and the certified interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSet {
    pub half_mean: f64,
    pub median: f64,
    /// Whether `p(median) = 1/2`; false when an atom of `M` straddles the median.
    pub median_is_exact: bool,
    pub balanced: f64,
    pub certified_lo: f64,
    pub certified_hi: f64,
}

impl ThresholdSet {
    pub fn contains(&self, tau: f64) -> bool {
        tau >= self.certified_lo && tau <= self.certified_hi
    }

    /// `points` equally spaced thresholds covering the certified interval.
    pub fn sweep(&self, points: usize) -> Vec<f64> {
        linspace(self.certified_lo, self.certified_hi, points)
    }
}

/// `points` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (points - 1) as f64;
            (0..points)
                .map(|k| if k + 1 == points { hi } else { lo + k as f64 * step })
                .collect()
        }
    }
}

/// `E[M] / 2`.
pub fn half_mean(inst: &Instance) -> Result<f64> {
    Ok(0.5 * inst.expected_max()?)
}

/// `inf{x : F(x) >= 1/2}` and whether `p` equals one half there.
pub fn median_of_max(inst: &Instance) -> Result<(f64, bool)> {
    let median = inst.max_distribution().quantile(0.5)?;
    let exact = (inst.exceed_prob(median) - 0.5).abs() <= MEDIAN_EXACT_TOLERANCE;
    Ok((median, exact))
}

/// The unique root of `R(tau) = tau`, by bisection of the strictly decreasing
/// `R(tau) - tau` on `[0, max(R(0), 1)]`.
///
/// Returns a point whose residual and final bracket width are both within `tol`.
pub fn balanced_surplus(inst: &Instance, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain {
            what: "solver tolerance",
            value: tol,
            domain: "(0, inf)",
        });
    }
    let gap = |tau: f64| inst.aggregate_surplus(tau) - tau;
    let total = inst.aggregate_surplus(0.0);
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = total.max(1.0);
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let g = gap(mid);
        if g == 0.0 || (hi - lo <= tol && g.abs() <= tol) {
            return Ok(mid);
        }
        if mid <= lo || mid >= hi {
            // Bracket collapsed onto adjacent floats.
            return if g.abs() <= tol {
                Ok(mid)
            } else {
                Err(Error::Solver(format!(
                    "bracket [{lo}, {hi}] collapsed with residual {g:e}"
                )))
            };
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Solver(format!(
        "no root within {tol:e} after {MAX_ITERATIONS} iterations (bracket [{lo}, {hi}])"
    )))
}

/// All three thresholds and `[min(median, E[M]/2), max(median, tau*)]`.
pub fn certified_interval(inst: &Instance) -> Result<ThresholdSet> {
    let half_mean = half_mean(inst)?;
    let (median, median_is_exact) = median_of_max(inst)?;
    let balanced = balanced_surplus(inst, DEFAULT_TOLERANCE)?;
    Ok(ThresholdSet {
        half_mean,
        median,
        median_is_exact,
        balanced,
        certified_lo: median.min(half_mean),
        certified_hi: median.max(balanced),
    })
}
