//! Bisection over the first sampling instant.
//!
//! The recursion in [`crate::schedule`] turns one free variable, the first
//! instant `t1`, into a whole candidate schedule. Too small a `t1` makes the
//! generated intervals collapse to zero; too large a `t1` makes them stop
//! shrinking and diverge. In between lies a window of first instants whose
//! sequences stay admissible all the way to the evaluation horizon, and the
//! window is an interval: starts below it violate positivity, starts above
//! it violate monotonicity. That ordering makes plain bisection on the
//! classification (not on the objective value) converge to the window.

use crate::dist::TteDistribution;
use crate::penalty::{penalty_components, PenaltyBreakdown};
use crate::schedule::{generate, Classification, PenaltyWeights, Schedule};
use crate::{Error, Result};
use serde::Serialize;

/// Knobs of [`solve`]. `Default` matches the values used throughout the
/// documentation: horizon at six means, tail mass 1e-22, bracket and
/// tolerance derived from the problem scale, 200 iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Evaluation horizon as a multiple of the distribution mean. The
    /// schedule must stay admissible up to `horizon_multiplier * mean`.
    pub horizon_multiplier: f64,
    /// Tail mass left uncovered by the final sample; the tail sample sits
    /// at the `(1-eps)`-quantile.
    pub eps: f64,
    /// Optional starting bracket for `t1`. Endpoints are re-expanded until
    /// they classify on opposite sides of the valid window, so a rough
    /// guess is fine. `None` starts from `(alpha/beta, median)`.
    pub bracket: Option<(f64, f64)>,
    /// Bisection stops once the bracket is narrower than this, seconds.
    /// `None` means `1e-12 * mean`.
    pub t1_tolerance: Option<f64>,
    /// Hard iteration cap; exceeding it is a convergence error.
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            horizon_multiplier: 6.0,
            eps: 1e-22,
            bracket: None,
            t1_tolerance: None,
            max_iterations: 200,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_multiplier > 1.0) || !self.horizon_multiplier.is_finite() {
            return Err(Error::Parameter(format!(
                "horizon_multiplier must exceed 1, got {}",
                self.horizon_multiplier
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Parameter(format!(
                "eps must lie strictly between 0 and 1, got {}",
                self.eps
            )));
        }
        if let Some((lo, hi)) = self.bracket {
            if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
                return Err(Error::Parameter(format!(
                    "bracket must satisfy 0 < low < high, got ({lo}, {hi})"
                )));
            }
        }
        if let Some(tol) = self.t1_tolerance {
            if !(tol > 0.0) || !tol.is_finite() {
                return Err(Error::Parameter(format!(
                    "t1_tolerance must be positive, got {tol}"
                )));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::Parameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// One bisection iteration: the bracket before the update and how the
/// midpoint's sequence classified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketStep {
    pub low: f64,
    pub high: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    /// First sampling instant of the returned schedule, seconds.
    pub t1_star: f64,
    /// Valid schedule with the tail sample appended.
    pub schedule: Schedule,
    pub breakdown: PenaltyBreakdown,
    /// Midpoint classifications performed.
    pub iterations: usize,
    pub bracket_trace: Vec<BracketStep>,
    /// True when no midpoint stayed admissible through the horizon before
    /// the bracket collapsed below the tolerance. The result is then the
    /// longest admissible prefix of the final midpoint's sequence; its
    /// penalty is still within the bracket tolerance of the optimum, but
    /// it ends short of the horizon (the rest of the mass is carried by
    /// the tail sample alone).
    pub degraded: bool,
}

/// Find a `(low, high)` pair enclosing the valid window at the default
/// horizon: `generate(low)` violates interval positivity and
/// `generate(high)` violates interval monotonicity.
pub fn initial_bracket(d: &TteDistribution, w: &PenaltyWeights) -> Result<(f64, f64)> {
    let cfg = SolverConfig::default();
    bracket_with(d, w, cfg.horizon_multiplier * d.mean(), default_start(d, w))
}

/// Starting guesses: the recursion subtracts `alpha/beta` per step, so
/// anything at that scale collapses; the median is past the typical window
/// and diverges.
fn default_start(d: &TteDistribution, w: &PenaltyWeights) -> (f64, f64) {
    (w.ratio() * (1.0 + 1e-6), d.median())
}

/// Expansion limit for each bracket endpoint.
const MAX_EXPANSIONS: usize = 60;

fn bracket_with(
    d: &TteDistribution,
    w: &PenaltyWeights,
    horizon: f64,
    start: (f64, f64),
) -> Result<(f64, f64)> {
    let (mut low, mut high) = start;
    let mut low_ok = false;
    for _ in 0..MAX_EXPANSIONS {
        let s = generate(d, w, low, horizon)?;
        if matches!(s.classification(), Classification::ViolatesPositive(_)) {
            low_ok = true;
            break;
        }
        low /= 2.0;
    }
    let mut high_ok = false;
    for _ in 0..MAX_EXPANSIONS {
        let s = generate(d, w, high, horizon)?;
        if matches!(s.classification(), Classification::ViolatesDecreasing(_)) {
            high_ok = true;
            break;
        }
        high *= 2.0;
    }
    if !low_ok || !high_ok || low >= high {
        return Err(Error::NoValidWindow {
            low,
            high,
            detail: format!(
                "no collapsing/diverging pair within {MAX_EXPANSIONS} expansions from \
                 ({}, {})",
                start.0, start.1
            ),
        });
    }
    Ok((low, high))
}

/// Bisect the first instant until a generated sequence stays admissible
/// through the horizon, then append the tail sample and price the result.
///
/// Each iteration classifies the midpoint's sequence: a positivity
/// violation raises `low`, a monotonicity violation lowers `high`, and the
/// first admissible midpoint wins. If the bracket narrows below the
/// tolerance first, the final midpoint's longest admissible prefix is
/// returned instead and the result is flagged `degraded`; at tight
/// tolerances the valid window can be narrower than the tolerance itself,
/// so this is the expected exit for long horizons. Exhausting
/// `max_iterations` with the bracket still wide is a convergence error
/// carrying the full trace.
pub fn solve(
    d: &TteDistribution,
    w: &PenaltyWeights,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    cfg.validate()?;
    let mean = d.mean();
    let horizon = cfg.horizon_multiplier * mean;
    let tol = cfg.t1_tolerance.unwrap_or(1e-12 * mean);
    let start = cfg.bracket.unwrap_or_else(|| default_start(d, w));
    let (mut low, mut high) = bracket_with(d, w, horizon, start)?;

    let mut trace: Vec<BracketStep> = Vec::new();
    let mut iterations = 0usize;
    let mut found: Option<(f64, Schedule)> = None;
    while iterations < cfg.max_iterations && high - low > tol {
        let mid = 0.5 * (low + high);
        let s = generate(d, w, mid, horizon)?;
        iterations += 1;
        trace.push(BracketStep { low, high, classification: s.classification() });
        match s.classification() {
            Classification::Valid => {
                found = Some((mid, s));
                break;
            }
            Classification::ViolatesPositive(_) => low = mid,
            Classification::ViolatesDecreasing(_) => high = mid,
        }
    }

    let (t1_star, bare, degraded) = match found {
        Some((t1, s)) => (t1, s, false),
        None => {
            if high - low > tol {
                return Err(Error::Convergence { iterations, trace });
            }
            let mid = 0.5 * (low + high);
            let s = generate(d, w, mid, horizon)?;
            if s.is_valid() {
                (mid, s, false)
            } else {
                // The violating instant was already dropped by generate, so
                // the remaining prefix reclassifies as admissible.
                let prefix = Schedule::from_instants(s.instants().to_vec())?;
                (mid, prefix, true)
            }
        }
    };

    let schedule = bare.append_tail(d, cfg.eps)?;
    let breakdown = penalty_components(d, w, &schedule)?;
    Ok(SolverResult {
        t1_star,
        schedule,
        breakdown,
        iterations,
        bracket_trace: trace,
        degraded,
    })
}

// ======================================================================
// tests
// ======================================================================
