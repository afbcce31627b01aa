//! Closed-form evaluation of the expected energy penalty of a schedule.
//!
//! Given sampling instants `t_1 < ... < t_N` plus a tail sample `t_{N+1}`,
//! an event at `T` in the interval `(t_{n-1}, t_n]` costs `n` samples and a
//! reporting delay of `t_n - T`. Averaging over the event distribution:
//!
//! ```text
//! E[S] = sum_n n * (F(t_n) - F(t_{n-1}))
//! E[W] = sum_n t_n * (F(t_n) - F(t_{n-1})) - PE(t_{n-1}, t_n)
//! penalty = alpha * E[S] + beta * E[W]
//! ```
//!
//! with `PE` the partial expectation of the distribution. Each interval is
//! integrated exactly from CDF differences and `PE`; no quadrature. Event
//! mass beyond the tail sample (at most the solver's `eps`) carries zero
//! penalty here and is accounted separately by the truncation bound.

use crate::dist::TteDistribution;
use crate::schedule::{PenaltyWeights, Schedule};
use crate::{Error, Result};
use serde::Serialize;

/// Expected penalty of one monitoring cycle, split into its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltyBreakdown {
    /// Expected number of samples per cycle, dimensionless. At least 1.
    pub expected_samples: f64,
    /// Expected wait between the event and the sample that reports it,
    /// seconds.
    pub expected_wait: f64,
    /// `alpha * expected_samples + beta * expected_wait`, joules.
    pub penalty: f64,
    /// Upper bound on the penalty mass ignored beyond the tail sample,
    /// joules.
    pub truncation_bound: f64,
}

/// Evaluate a solver-grade schedule: must be classified valid and carry a
/// tail sample.
pub fn penalty_components(
    d: &TteDistribution,
    w: &PenaltyWeights,
    s: &Schedule,
) -> Result<PenaltyBreakdown> {
    if !s.is_valid() {
        return Err(Error::Contract(format!(
            "penalty is defined for valid schedules, this one is {:?}",
            s.classification()
        )));
    }
    let Some(tail) = s.tail_instant() else {
        return Err(Error::Contract(
            "penalty needs a tail sample; call append_tail first".into(),
        ));
    };
    penalty_of_instants(d, w, s.instants(), tail)
}

/// Evaluate a raw instant list. Only structural requirements are imposed
/// (finite, strictly increasing from a positive first instant, tail beyond
/// the last); the decreasing-interval condition is not, so perturbed and
/// deliberately suboptimal schedules can be priced too.
pub fn penalty_of_instants(
    d: &TteDistribution,
    w: &PenaltyWeights,
    instants: &[f64],
    tail: f64,
) -> Result<PenaltyBreakdown> {
    if instants.is_empty() {
        return Err(Error::Parameter("at least one instant is required".into()));
    }
    let mut prev = 0.0;
    for &t in instants {
        if !t.is_finite() || t <= prev {
            return Err(Error::Parameter(format!(
                "instants must be finite and strictly increasing from 0, got {t} after {prev}"
            )));
        }
        prev = t;
    }
    if !tail.is_finite() || tail <= prev {
        return Err(Error::Parameter(format!(
            "tail sample {tail} must lie beyond the last instant {prev}"
        )));
    }

    let mut es = 0.0;
    let mut ew = 0.0;
    let mut t_prev = 0.0;
    let mut ccdf_prev = 1.0;
    for (n, &t) in instants.iter().chain(std::iter::once(&tail)).enumerate() {
        let ccdf_t = d.ccdf(t);
        let mass = ccdf_prev - ccdf_t;
        es += (n + 1) as f64 * mass;
        ew += t * mass - d.partial_expectation(t_prev, t)?;
        t_prev = t;
        ccdf_prev = ccdf_t;
    }
    let last = *instants.last().unwrap();
    let truncation_bound =
        ((d.ccdf(last) - d.ccdf(tail)) * (w.alpha + w.beta * (tail - last))).max(0.0);
    Ok(PenaltyBreakdown {
        expected_samples: es,
        expected_wait: ew,
        penalty: w.alpha * es + w.beta * ew,
        truncation_bound,
    })
}

/// Partial derivative of the penalty with respect to the interior instant
/// `t_n` (1-based, `1 <= n <= N-1`):
///
/// ```text
/// r_n = beta * (F(t_n) - F(t_{n-1})) - f(t_n) * (alpha + beta * (t_{n+1} - t_n))
/// ```
///
/// Schedules produced by the stationarity recursion zero this expression,
/// so its magnitude measures how far a schedule is from first-order
/// optimality. The last instant is excluded: it is pinned by the horizon
/// crossing, not by stationarity.
pub fn stationarity_residual(
    d: &TteDistribution,
    w: &PenaltyWeights,
    s: &Schedule,
    n: usize,
) -> Result<f64> {
    let ts = s.instants();
    if n < 1 || n + 1 > ts.len() {
        return Err(Error::Parameter(format!(
            "residual index must satisfy 1 <= n <= {}, got {n}",
            ts.len().saturating_sub(1)
        )));
    }
    let t_before = if n >= 2 { ts[n - 2] } else { 0.0 };
    let t_n = ts[n - 1];
    let t_after = ts[n];
    let at_n = d.eval(t_n)?;
    Ok(w.beta * (d.ccdf(t_before) - at_n.ccdf)
        - at_n.pdf * (w.alpha + w.beta * (t_after - t_n)))
}

/// Bound on the penalty contribution of events later than the horizon
/// crossing `t_horizon`: at most the stranded probability mass times the
/// worst per-event cost (one extra sample plus a wait no longer than the
/// gap to the tail sample at the `(1-eps)`-quantile).
pub fn truncation_error_bound(
    d: &TteDistribution,
    w: &PenaltyWeights,
    t_horizon: f64,
    eps: f64,
) -> Result<f64> {
    if !(t_horizon > 0.0) || !t_horizon.is_finite() {
        return Err(Error::Parameter(format!(
            "t_horizon must be positive and finite, got {t_horizon}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!(
            "eps must lie strictly between 0 and 1, got {eps}"
        )));
    }
    let stranded = d.ccdf(t_horizon) - eps;
    if stranded <= 0.0 {
        return Ok(0.0);
    }
    let tail = d.inverse_ccdf(eps)?;
    Ok(stranded * (w.alpha + w.beta * (tail - t_horizon)))
}

// ======================================================================
// tests
// ======================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Family;
    use crate::schedule::generate;

    fn mean1() -> TteDistribution {
        TteDistribution::from_mean(Family::Rayleigh, 1.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    /// Valid 15-instant schedule used by several tests below.
    fn fig_schedule() -> (TteDistribution, PenaltyWeights, Schedule) {
        let d = mean1();
        let w = PenaltyWeights::from_ratio(21.7).unwrap();
        let s = generate(&d, &w, 0.5826, 2.9).unwrap();
        assert!(s.is_valid());
        (d, w, s)
    }

    #[test]
    fn one_instant_schedule_captures_the_whole_mean() {
        // One sample at the 1e-12 quantile catches essentially every event:
        // E[S] is 1 plus the leaked mass, E[W] is t_1 - E[T] plus crumbs.
        let d = mean1();
        let w = PenaltyWeights::new(1.0, 1.0).unwrap();
        let t1 = d.inverse_ccdf(1e-12).unwrap();
        let tail = d.inverse_ccdf(1e-22).unwrap();
        let b = penalty_of_instants(&d, &w, &[t1], tail).unwrap();
        assert!(b.expected_samples > 1.0 && b.expected_samples - 1.0 < 2e-12);
        assert!((b.expected_wait - (t1 - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn penalty_is_exactly_the_weighted_sum() {
        let (d, w, s) = fig_schedule();
        let tailed = s.append_tail(&d, 1e-22).unwrap();
        let b = penalty_components(&d, &w, &tailed).unwrap();
        assert_eq!(b.penalty, w.alpha * b.expected_samples + w.beta * b.expected_wait);
        assert!(b.expected_samples >= 1.0);
        assert!(b.expected_wait >= 0.0);
    }

    #[test]
    fn components_delegate_to_the_raw_evaluator() {
        let (d, w, s) = fig_schedule();
        let tailed = s.append_tail(&d, 1e-22).unwrap();
        let a = penalty_components(&d, &w, &tailed).unwrap();
        let b = penalty_of_instants(&d, &w, tailed.instants(), tailed.tail_instant().unwrap())
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn contract_errors_for_unfit_schedules() {
        let (d, w, s) = fig_schedule();
        // no tail appended
        assert!(matches!(penalty_components(&d, &w, &s), Err(Error::Contract(_))));
        // invalid classification
        let bad = generate(&d, &w, 0.3, 2.9).unwrap();
        assert!(matches!(penalty_components(&d, &w, &bad), Err(Error::Contract(_))));
    }

    #[test]
    fn raw_evaluator_validates_structure() {
        let d = mean1();
        let w = PenaltyWeights::from_ratio(21.7).unwrap();
        assert!(penalty_of_instants(&d, &w, &[], 5.0).is_err());
        assert!(penalty_of_instants(&d, &w, &[1.0, 0.9], 5.0).is_err());
        assert!(penalty_of_instants(&d, &w, &[-1.0, 0.9], 5.0).is_err());
        assert!(penalty_of_instants(&d, &w, &[1.0, 2.0], 2.0).is_err());
        assert!(penalty_of_instants(&d, &w, &[1.0, f64::NAN], 5.0).is_err());
    }

    #[test]
    fn recursion_output_is_stationary() {
        let (d, w, s) = fig_schedule();
        for n in 1..s.len() {
            let r = stationarity_residual(&d, &w, &s, n).unwrap();
            assert!(
                r.abs() < 1e-9 * w.beta,
                "interior instant {n} is not stationary: r = {r:e}"
            );
        }
        assert!(stationarity_residual(&d, &w, &s, 0).is_err());
        assert!(stationarity_residual(&d, &w, &s, s.len()).is_err());
    }

    #[test]
    fn residual_matches_finite_difference_of_the_penalty() {
        // Nudge t_3 off stationarity, then check that r_3 equals the
        // central difference of the penalty in t_3 (same fixed tail).
        let (d, w, s) = fig_schedule();
        let tail = d.inverse_ccdf(1e-22).unwrap();
        let mut ts = s.instants().to_vec();
        ts[2] += 1e-3;
        let perturbed = Schedule::from_instants(ts.clone()).unwrap();
        let r3 = stationarity_residual(&d, &w, &perturbed, 3).unwrap();
        assert!(r3.abs() > 1e-3, "perturbation should break stationarity, r3 = {r3:e}");

        let h = 1e-5;
        let mut up = ts.clone();
        let mut down = ts;
        up[2] += h;
        down[2] -= h;
        let p_up = penalty_of_instants(&d, &w, &up, tail).unwrap().penalty;
        let p_down = penalty_of_instants(&d, &w, &down, tail).unwrap().penalty;
        let fd = (p_up - p_down) / (2.0 * h);
        assert!(
            rel(fd, r3) < 1e-4,
            "finite difference {fd:e} disagrees with residual {r3:e}"
        );
    }

    #[test]
    fn residual_depends_only_on_its_three_neighbors() {
        let (d, w, s) = fig_schedule();
        let baseline: Vec<f64> = (1..s.len())
            .map(|n| stationarity_residual(&d, &w, &s, n).unwrap())
            .collect();
        let mut ts = s.instants().to_vec();
        ts[4] += 1e-3; // t_5, 1-based
        let perturbed = Schedule::from_instants(ts).unwrap();
        for n in 1..s.len() {
            let r = stationarity_residual(&d, &w, &perturbed, n).unwrap();
            if (4..=6).contains(&n) {
                assert_ne!(r, baseline[n - 1], "r_{n} should feel the nudge of t_5");
            } else {
                // untouched arguments, bit-identical result
                assert_eq!(r, baseline[n - 1], "r_{n} must not feel the nudge of t_5");
            }
        }
    }

    #[test]
    fn truncation_bound_frozen_value() {
        let d = mean1();
        let w = PenaltyWeights::new(1.0, 21.0).unwrap();
        let b = truncation_error_bound(&d, &w, 2.8, 1e-22).unwrap();
        assert!(rel(b, 0.234_730_210_332_595_28) < 1e-12, "b={b:.17}");
    }

    #[test]
    fn truncation_bound_shrinks_with_the_stated_horizon_rate() {
        // At a horizon of six means the bound collapses below
        // 6e-13 * (alpha + 2 beta mean) for any weight scale.
        for (mean, alpha, beta) in [(1.0, 1.0, 21.7), (4.846, 0.0153621, 0.334), (2.5, 0.3, 11.0)]
        {
            let d = TteDistribution::from_mean(Family::Rayleigh, mean).unwrap();
            let w = PenaltyWeights::new(alpha, beta).unwrap();
            let b = truncation_error_bound(&d, &w, 6.0 * mean, 1e-22).unwrap();
            let limit = 6e-13 * (alpha + 2.0 * beta * mean);
            assert!(
                b > 0.0 && b <= limit,
                "mean={mean}: bound {b:e} exceeds {limit:e}"
            );
        }
    }

    #[test]
    fn truncation_bound_empty_residual_interval() {
        let d = mean1();
        let w = PenaltyWeights::new(1.0, 21.0).unwrap();
        // eps equal to the stranded mass leaves nothing beyond the tail
        let eps = d.ccdf(2.8);
        assert_eq!(truncation_error_bound(&d, &w, 2.8, eps).unwrap(), 0.0);
        assert_eq!(truncation_error_bound(&d, &w, 2.8, 0.5).unwrap(), 0.0);
        assert!(truncation_error_bound(&d, &w, 2.8, 0.0).is_err());
        assert!(truncation_error_bound(&d, &w, 2.8, 1.0).is_err());
        assert!(truncation_error_bound(&d, &w, -1.0, 1e-22).is_err());
    }

    #[test]
    fn breakdown_truncation_matches_the_bound_at_the_last_instant() {
        let (d, w, s) = fig_schedule();
        let tailed = s.append_tail(&d, 1e-22).unwrap();
        let b = penalty_components(&d, &w, &tailed).unwrap();
        let last = *tailed.instants().last().unwrap();
        let direct = truncation_error_bound(&d, &w, last, 1e-22).unwrap();
        assert!(rel(b.truncation_bound, direct) < 1e-9);
    }
}
