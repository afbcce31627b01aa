//! Candidate sampling schedules from the recursive optimality condition.
//!
//! Setting the derivative of the expected penalty with respect to an
//! interior instant to zero and solving for the following instant gives the
//! recursion
//!
//! ```text
//! t[n+1] = t[n] + (F(t[n]) - F(t[n-1])) / f(t[n]) - alpha / beta
//! ```
//!
//! with `t[0] = 0`. A schedule generated from a trial first instant is
//! energy-stationary by construction; whether it is *admissible* depends on
//! two interval conditions: every interval must be strictly positive and
//! the intervals must strictly decrease (the event becomes more imminent as
//! time passes, so sampling must accelerate). This module generates and
//! classifies such sequences; picking the first instant is the solver's job.

use crate::dist::{TteDistribution, EXP_ARG_LIMIT};
use crate::{Error, Result};
use serde::Serialize;

/// Safety cap on generated sequence length; hitting it means the horizon is
/// unreachable for numerical reasons and aborting beats spinning.
const MAX_INSTANTS: usize = 10_000_000;

/// Penalty weights of the objective `alpha * E[S] + beta * E[W]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltyWeights {
    /// Energy per discarded sample, joules.
    pub alpha: f64,
    /// Idle power while waiting, watts.
    pub beta: f64,
}

impl PenaltyWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() || !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Parameter(format!(
                "penalty weights must be positive and finite, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(PenaltyWeights { alpha, beta })
    }

    /// Normalized weights from a bare `beta / alpha` ratio: `alpha` is set
    /// to 1 J. Relative comparisons between policies only depend on the
    /// ratio, so this is enough for percentage studies.
    pub fn from_ratio(beta_over_alpha: f64) -> Result<Self> {
        Self::new(1.0, beta_over_alpha)
    }

    /// Interval decrement of the recursion, seconds.
    pub fn ratio(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// Power and timing figures of the monitored terminal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviceProfile {
    /// One-way communication delay, seconds.
    pub tau_c: f64,
    /// Back-end processing delay, seconds. Must stay below the smallest
    /// sampling interval of any schedule this profile is simulated with;
    /// that is checked where schedules meet the profile, not here.
    pub tau_s: f64,
    /// Radio power while communicating, watts.
    pub p_c: f64,
    /// Idle power, watts.
    pub p_0: f64,
}

impl DeviceProfile {
    pub fn new(tau_c: f64, tau_s: f64, p_c: f64, p_0: f64) -> Result<Self> {
        for (name, v) in [("tau_c", tau_c), ("tau_s", tau_s), ("p_c", p_c), ("p_0", p_0)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "device {name} must be positive and finite, got {v}"
                )));
            }
        }
        if p_c <= p_0 {
            return Err(Error::Parameter(format!(
                "communication power must exceed idle power, got p_c={p_c} <= p_0={p_0}"
            )));
        }
        Ok(DeviceProfile { tau_c, tau_s, p_c, p_0 })
    }

    /// Penalty weights implied by the profile: each discarded sample burns
    /// `tau_c * (p_c - p_0)` extra joules, and waiting costs `p_0` watts.
    pub fn weights(&self) -> PenaltyWeights {
        PenaltyWeights {
            alpha: self.tau_c * (self.p_c - self.p_0),
            beta: self.p_0,
        }
    }
}

/// Admissibility of a generated or user-supplied instant sequence.
///
/// The index `n` in the violation variants is the length of the longest
/// prefix that still satisfies both interval conditions (1-based, counting
/// sampling instants; the violating instant is the `n+1`-th).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Valid,
    /// Some interval came out zero or negative: the first instant was too
    /// small and the sequence collapsed.
    ViolatesPositive(usize),
    /// Some interval failed to shrink (or the recursion overflowed): the
    /// first instant was too large and the sequence diverges.
    ViolatesDecreasing(usize),
}

impl Classification {
    pub fn is_valid(&self) -> bool {
        matches!(self, Classification::Valid)
    }
}

/// A sequence of sampling instants, classified, with an optional final
/// tail sample far out in the distribution's tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    instants: Vec<f64>,
    tail_instant: Option<f64>,
    classification: Classification,
}

impl Schedule {
    /// Classify an explicit list of instants (for example one read back
    /// from a result file). All instants are kept regardless of the
    /// classification outcome.
    pub fn from_instants(instants: Vec<f64>) -> Result<Schedule> {
        if instants.is_empty() {
            return Err(Error::Parameter("a schedule needs at least one instant".into()));
        }
        if instants.iter().any(|t| !t.is_finite()) {
            return Err(Error::Parameter("instants must all be finite".into()));
        }
        let classification = classify(&instants);
        Ok(Schedule { instants, tail_instant: None, classification })
    }

    /// Equispaced instants `T, 2T, ...` up to the first one at or past
    /// `horizon`, with an explicit tail sample. Periodic spacing never
    /// satisfies the decreasing-interval condition, so the classification
    /// is honest about that; the simulator and the periodic evaluator do
    /// not require it.
    pub fn periodic(period: f64, horizon: f64, tail_instant: f64) -> Result<Schedule> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Parameter(format!("period must be positive, got {period}")));
        }
        if horizon < period {
            return Err(Error::Parameter(format!(
                "horizon {horizon} is shorter than one period {period}"
            )));
        }
        let n = (horizon / period).ceil() as usize;
        let instants: Vec<f64> = (1..=n).map(|k| k as f64 * period).collect();
        let mut s = Schedule::from_instants(instants)?;
        if tail_instant <= *s.instants.last().unwrap() {
            return Err(Error::Parameter(format!(
                "tail instant {tail_instant} does not lie beyond the last periodic instant"
            )));
        }
        s.tail_instant = Some(tail_instant);
        Ok(s)
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    pub fn tail_instant(&self) -> Option<f64> {
        self.tail_instant
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn is_valid(&self) -> bool {
        self.classification.is_valid()
    }

    /// Number of instants, tail excluded.
    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    /// Smallest gap between consecutive samples, the tail gap included and
    /// the leading `(0, t1]` interval excluded (no sample precedes `t1`, so
    /// nothing is being processed there).
    pub fn min_sampling_interval(&self) -> Option<f64> {
        let mut min: Option<f64> = None;
        let mut track = |gap: f64| {
            min = Some(match min {
                Some(m) if m <= gap => m,
                _ => gap,
            });
        };
        for w in self.instants.windows(2) {
            track(w[1] - w[0]);
        }
        if let Some(tail) = self.tail_instant {
            track(tail - *self.instants.last().unwrap());
        }
        min
    }

    /// Copy of `self` with a final sample at the `(1-eps)`-quantile, so
    /// that all but an `eps` sliver of the event mass is covered.
    pub fn append_tail(&self, d: &TteDistribution, eps: f64) -> Result<Schedule> {
        if !self.is_valid() {
            return Err(Error::Contract(format!(
                "tail can only be appended to a valid schedule, this one is {:?}",
                self.classification
            )));
        }
        let tail = d.inverse_ccdf(eps)?;
        let last = *self.instants.last().unwrap();
        if tail <= last {
            return Err(Error::Parameter(format!(
                "tail sample at {tail} does not exceed the last instant {last}; eps={eps} is too \
                 large for this horizon"
            )));
        }
        Ok(Schedule {
            instants: self.instants.clone(),
            tail_instant: Some(tail),
            classification: self.classification,
        })
    }
}

/// Interval checks shared by `from_instants` and `generate`. Returns the
/// classification of the full list, with `t[0] = 0` prepended.
fn classify(instants: &[f64]) -> Classification {
    let mut t_prev = 0.0;
    let mut d_prev = f64::INFINITY; // no constraint on the first interval's size
    for (i, &t) in instants.iter().enumerate() {
        let gap = t - t_prev;
        if gap <= 0.0 {
            return Classification::ViolatesPositive(i);
        }
        if gap >= d_prev {
            return Classification::ViolatesDecreasing(i);
        }
        t_prev = t;
        d_prev = gap;
    }
    Classification::Valid
}

/// One step of the stationarity recursion, using the family's closed form
/// where it has one.
///
/// For Rayleigh the CDF-difference quotient collapses to
///
/// ```text
/// t[n+1] = t[n] + (sigma^2 / t[n]) * (exp((t[n]^2 - t[n-1]^2) / (2 sigma^2)) - 1) - alpha / beta
/// ```
///
/// evaluated through `exp_m1` so that nearly-equal consecutive instants do
/// not cancel. Exponent arguments beyond [`EXP_ARG_LIMIT`] report an
/// overflow error; a sequence that gets there has already diverged.
pub fn next_instant(
    d: &TteDistribution,
    w: &PenaltyWeights,
    t_prev: f64,
    t_curr: f64,
) -> Result<f64> {
    check_state(t_prev, t_curr)?;
    match d {
        TteDistribution::Rayleigh { sigma } => {
            let s2 = sigma * sigma;
            let arg = (t_curr * t_curr - t_prev * t_prev) / (2.0 * s2);
            if arg > EXP_ARG_LIMIT {
                return Err(Error::Overflow(format!(
                    "recursion exponent {arg:.1} exceeds {EXP_ARG_LIMIT} at t={t_curr}"
                )));
            }
            Ok(t_curr + s2 / t_curr * arg.exp_m1() - w.ratio())
        }
    }
}

/// The same step through the family-agnostic CDF/pdf route. Slower and
/// less tail-robust than [`next_instant`], but usable for any distribution
/// that offers pointwise evaluation; it also serves as a cross-check of the
/// closed form.
pub fn next_instant_generic(
    d: &TteDistribution,
    w: &PenaltyWeights,
    t_prev: f64,
    t_curr: f64,
) -> Result<f64> {
    check_state(t_prev, t_curr)?;
    let curr = d.eval(t_curr)?;
    if curr.pdf == 0.0 {
        return Err(Error::Singularity(format!(
            "density vanishes at t={t_curr}, the difference quotient is undefined"
        )));
    }
    // F(t_curr) - F(t_prev) computed as a CCDF difference; identical
    // cancellation behavior, no spurious loss near the CDF's saturation.
    let prev = d.eval(t_prev)?;
    Ok(t_curr + (prev.ccdf - curr.ccdf) / curr.pdf - w.ratio())
}

fn check_state(t_prev: f64, t_curr: f64) -> Result<()> {
    if !(t_prev >= 0.0) || !(t_curr > t_prev) || !t_curr.is_finite() {
        return Err(Error::Parameter(format!(
            "recursion state must satisfy 0 <= t_prev < t_curr, got ({t_prev}, {t_curr})"
        )));
    }
    Ok(())
}

/// Generate a schedule from a trial first instant.
///
/// The recursion runs until an instant lands at or past `horizon` (the
/// sequence is then `Valid`, and the crossing instant is kept) or until an
/// interval condition breaks, in which case the violating instant is
/// dropped, the surviving prefix is kept and the classification records the
/// prefix length. Overflow inside the recursion counts as a
/// decreasing-interval violation, because blowing up is exactly how that
/// violation ends.
pub fn generate(
    d: &TteDistribution,
    w: &PenaltyWeights,
    t1: f64,
    horizon: f64,
) -> Result<Schedule> {
    if !(t1 > 0.0) || !t1.is_finite() {
        return Err(Error::Parameter(format!("t1 must be positive, got {t1}")));
    }
    if !(horizon > t1) {
        return Err(Error::Parameter(format!(
            "horizon must exceed t1, got horizon={horizon}, t1={t1}"
        )));
    }
    let mut instants = vec![t1];
    let mut t_prev = 0.0;
    let mut t_curr = t1;
    let classification = loop {
        let t_next = match next_instant(d, w, t_prev, t_curr) {
            Ok(t) => t,
            Err(Error::Overflow(_)) => break Classification::ViolatesDecreasing(instants.len()),
            Err(e) => return Err(e),
        };
        if t_next.is_nan() {
            break Classification::ViolatesDecreasing(instants.len());
        }
        let gap = t_next - t_curr;
        if gap <= 0.0 {
            break Classification::ViolatesPositive(instants.len());
        }
        if gap >= t_curr - t_prev {
            break Classification::ViolatesDecreasing(instants.len());
        }
        instants.push(t_next);
        if t_next >= horizon {
            break Classification::Valid;
        }
        if instants.len() >= MAX_INSTANTS {
            return Err(Error::Resource(format!(
                "{MAX_INSTANTS} instants generated without reaching horizon {horizon}"
            )));
        }
        t_prev = t_curr;
        t_curr = t_next;
    };
    Ok(Schedule { instants, tail_instant: None, classification })
}

// ======================================================================
// tests
// ======================================================================
