//! Periodic sampling policies used as comparison points.
//!
//! Two comparators matter in practice: a fixed-period baseline taken from
//! the deployed firmware, and the best achievable period for the same
//! distribution and weights. For period `T` the expected sample count is
//! the lattice sum `E[S] = sum_{n >= 0} ccdf(n T)` and the expected wait
//! follows from it exactly as `E[W] = T * E[S] - mean`, so no integration
//! is needed beyond the distribution primitives.

use crate::dist::TteDistribution;
use crate::penalty::PenaltyBreakdown;
use crate::schedule::PenaltyWeights;
use crate::{Error, Result};
use serde::Serialize;

/// Series terms below this are dropped; at f64 precision they cannot move
/// a sum that starts at 1.
pub const DEFAULT_TRUNCATION_EPS: f64 = 1e-15;

/// Guard against absurd periods: refuse series with more terms than this.
const MAX_SERIES_TERMS: f64 = 1e9;

/// Sample every `period` seconds until the event is caught.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodicPolicy {
    /// Sampling period, seconds.
    pub period: f64,
    /// Stop summing lattice terms once the survival mass at a sample falls
    /// below this.
    pub truncation_eps: f64,
}

impl PeriodicPolicy {
    pub fn new(period: f64) -> Result<Self> {
        Self::with_truncation(period, DEFAULT_TRUNCATION_EPS)
    }

    pub fn with_truncation(period: f64, truncation_eps: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Parameter(format!("period must be positive, got {period}")));
        }
        if !(truncation_eps > 0.0 && truncation_eps < 1.0) {
            return Err(Error::Parameter(format!(
                "truncation_eps must lie strictly between 0 and 1, got {truncation_eps}"
            )));
        }
        Ok(PeriodicPolicy { period, truncation_eps })
    }
}

/// Period search space for [`optimal_period`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchRange {
    /// Smallest period considered, seconds.
    pub t_min: f64,
    /// Largest period considered, seconds.
    pub t_max: f64,
    /// Width at which the golden-section refinement stops, seconds.
    pub tolerance: f64,
}

impl SearchRange {
    /// Three decades below the mean up to ten means, refined to 1e-9 of
    /// the mean. Wide enough for any weight ratio seen in practice.
    pub fn default_for(d: &TteDistribution) -> SearchRange {
        let mean = d.mean();
        SearchRange { t_min: 1e-3 * mean, t_max: 10.0 * mean, tolerance: 1e-9 * mean }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0) || !(self.t_max > self.t_min) || !self.t_max.is_finite() {
            return Err(Error::Parameter(format!(
                "search range must satisfy 0 < t_min < t_max, got ({}, {})",
                self.t_min, self.t_max
            )));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::Parameter(format!(
                "search tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Best-period search output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodicSearch {
    pub policy: PeriodicPolicy,
    pub breakdown: PenaltyBreakdown,
    /// The coarse scan bottomed out at an edge of the search range; the
    /// true optimum may lie outside it.
    pub boundary_warning: bool,
}

/// Exact expected penalty of a periodic policy via the lattice sum.
///
/// The reported truncation bound covers the dropped series tail: the first
/// dropped term plus an integral bound on everything after it, times the
/// worst per-sample cost `alpha + beta * period`.
pub fn periodic_penalty_components(
    d: &TteDistribution,
    w: &PenaltyWeights,
    policy: &PeriodicPolicy,
) -> Result<PenaltyBreakdown> {
    let p = PeriodicPolicy::with_truncation(policy.period, policy.truncation_eps)?;
    let needed = d.inverse_ccdf(p.truncation_eps)? / p.period;
    if needed > MAX_SERIES_TERMS {
        return Err(Error::Resource(format!(
            "period {} needs about {needed:.1e} series terms",
            p.period
        )));
    }

    let mut es = 0.0;
    let mut n = 0u64;
    let cut = loop {
        let t = n as f64 * p.period;
        let term = d.ccdf(t);
        if term < p.truncation_eps {
            break t;
        }
        es += term;
        n += 1;
    };
    let ew = p.period * es - d.mean();

    // dropped tail of the sample-count series: sum_{k >= n} ccdf(k T) is at
    // most ccdf(cut) plus the survival integral past cut, divided by T
    let dropped = d.ccdf(cut)
        + (d.partial_expectation(cut, f64::INFINITY)? - cut * d.ccdf(cut)) / p.period;
    Ok(PenaltyBreakdown {
        expected_samples: es,
        expected_wait: ew,
        penalty: w.alpha * es + w.beta * ew,
        truncation_bound: (w.alpha + w.beta * p.period) * dropped,
    })
}

const PHI: f64 = 1.618_033_988_749_895;
const RESP: f64 = 2.0 - PHI;

/// Best sampling period within `range`: a 100-point logarithmic scan
/// brackets the minimum, golden-section refines it. The penalty is smooth
/// and unimodal in the period over any practical range, so the scan is
/// about locating the basin, not global search.
pub fn optimal_period(
    d: &TteDistribution,
    w: &PenaltyWeights,
    range: &SearchRange,
) -> Result<PeriodicSearch> {
    range.validate()?;
    let eval = |t: f64| -> Result<f64> {
        let p = PeriodicPolicy::new(t)?;
        Ok(periodic_penalty_components(d, w, &p)?.penalty)
    };

    const COARSE: usize = 100;
    let log_span = (range.t_max / range.t_min).ln();
    let mut best = (f64::INFINITY, 0usize);
    let mut points = [0.0f64; COARSE];
    for (k, point) in points.iter_mut().enumerate() {
        let t = range.t_min * (log_span * k as f64 / (COARSE - 1) as f64).exp();
        *point = t;
        let pen = eval(t)?;
        if pen < best.0 {
            best = (pen, k);
        }
    }
    let i = best.1;
    let boundary_warning = i == 0 || i == COARSE - 1;

    let mut a = points[i.saturating_sub(1)];
    let mut b = points[(i + 1).min(COARSE - 1)];
    let mut x1 = a + RESP * (b - a);
    let mut x2 = b - RESP * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    while b - a > range.tolerance {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + RESP * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - RESP * (b - a);
            f2 = eval(x2)?;
        }
    }
    let period = 0.5 * (a + b);
    let policy = PeriodicPolicy::new(period)?;
    let breakdown = periodic_penalty_components(d, w, &policy)?;
    Ok(PeriodicSearch { policy, breakdown, boundary_warning })
}

// ======================================================================
// tests
// ======================================================================
