//! Time-to-event distribution models.
//!
//! Everything downstream (schedule recursion, penalty sums, periodic
//! comparators, simulation) consumes the TTE model only through the handful
//! of quantities defined here: density, CDF, CCDF, hazard, quantile of the
//! CCDF and partial expectation. One family is implemented (Rayleigh); the
//! enum leaves a seam for further families, which only need those same
//! primitives because the schedule recursion is written against them.

use crate::{Error, Result};
use serde::Serialize;

/// Probabilities below this are clamped to exactly zero instead of drifting
/// through subnormals; callers that care receive an explicit flag.
pub const CCDF_FLOOR: f64 = 1e-300;

/// Largest argument passed to `exp_m1` before the recursion is declared
/// divergent. `exp(710)` already overflows an f64; anywhere near this limit
/// the generated intervals have exploded by dozens of orders of magnitude.
pub const EXP_ARG_LIMIT: f64 = 700.0;

/// Distribution families understood by [`TteDistribution::from_mean`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    Rayleigh,
}

/// A time-to-event model: the random duration from the start of a
/// monitoring cycle to the completion of the observed event.
///
/// Instances are immutable; all methods are pure, so values can be shared
/// freely across threads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TteDistribution {
    /// Rayleigh with scale `sigma` (seconds). Density
    /// `f(t) = (t / sigma^2) exp(-t^2 / (2 sigma^2))` for `t >= 0`; its
    /// hazard `t / sigma^2` grows linearly, which is what guarantees a
    /// valid decreasing-interval schedule exists at all.
    Rayleigh { sigma: f64 },
}

/// Pointwise evaluation of the distribution functions at one `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalPoint {
    /// Density, 1/seconds.
    pub pdf: f64,
    /// `P(T <= t)`.
    pub cdf: f64,
    /// `P(T > t)`; clamped to 0 below [`CCDF_FLOOR`].
    pub ccdf: f64,
    /// `pdf / ccdf`; reported as `+inf` when the CCDF clamped to zero.
    pub hazard: f64,
    /// True when the CCDF fell below [`CCDF_FLOOR`] and was clamped. The
    /// pdf is clamped to 0 and the hazard to `+inf` in the same event.
    pub ccdf_underflow: bool,
}

impl TteDistribution {
    /// Rayleigh model from its scale parameter.
    pub fn rayleigh(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Parameter(format!(
                "Rayleigh sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(TteDistribution::Rayleigh { sigma })
    }

    /// Model of the given family with expected value `mean` seconds.
    ///
    /// For Rayleigh this sets `sigma = mean * sqrt(2/pi)`.
    pub fn from_mean(family: Family, mean: f64) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::Parameter(format!(
                "mean must be positive and finite, got {mean}"
            )));
        }
        match family {
            Family::Rayleigh => Self::rayleigh(mean * (2.0 / std::f64::consts::PI).sqrt()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            TteDistribution::Rayleigh { .. } => Family::Rayleigh,
        }
    }

    /// Scale parameter of the Rayleigh family.
    pub fn sigma(&self) -> f64 {
        match self {
            TteDistribution::Rayleigh { sigma } => *sigma,
        }
    }

    /// Expected value, seconds.
    pub fn mean(&self) -> f64 {
        match self {
            TteDistribution::Rayleigh { sigma } => sigma * (std::f64::consts::PI / 2.0).sqrt(),
        }
    }

    /// Median, seconds.
    pub fn median(&self) -> f64 {
        match self {
            TteDistribution::Rayleigh { sigma } => sigma * (2.0 * std::f64::consts::LN_2).sqrt(),
        }
    }

    /// `P(T > t)` with the underflow clamp applied. Requires `t >= 0`
    /// (callers on hot paths guarantee it; [`TteDistribution::eval`] checks).
    pub fn ccdf(&self, t: f64) -> f64 {
        match self {
            TteDistribution::Rayleigh { sigma } => {
                let z = t / sigma;
                let c = (-0.5 * z * z).exp();
                if c < CCDF_FLOOR {
                    0.0
                } else {
                    c
                }
            }
        }
    }

    /// `P(T <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.ccdf(t)
    }

    /// Density at `t`, clamped to 0 together with the CCDF.
    pub fn pdf(&self, t: f64) -> f64 {
        match self {
            TteDistribution::Rayleigh { sigma } => t / (sigma * sigma) * self.ccdf(t),
        }
    }

    /// All four pointwise quantities plus the underflow flag.
    pub fn eval(&self, t: f64) -> Result<EvalPoint> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("t must be >= 0, got {t}")));
        }
        match self {
            TteDistribution::Rayleigh { sigma } => {
                let ccdf = self.ccdf(t);
                let underflow = ccdf == 0.0 && t > 0.0;
                let pdf = t / (sigma * sigma) * ccdf;
                // pdf/ccdf cancels to t/sigma^2; evaluating the cancelled
                // form keeps the hazard exact deep into the tail.
                let hazard = if underflow {
                    f64::INFINITY
                } else {
                    t / (sigma * sigma)
                };
                Ok(EvalPoint {
                    pdf,
                    cdf: 1.0 - ccdf,
                    ccdf,
                    hazard,
                    ccdf_underflow: underflow,
                })
            }
        }
    }

    /// The `t` with `ccdf(t) = eps`, i.e. the `(1-eps)`-quantile.
    pub fn inverse_ccdf(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Parameter(format!(
                "eps must lie strictly inside (0, 1), got {eps}"
            )));
        }
        match self {
            TteDistribution::Rayleigh { sigma } => Ok(sigma * (-2.0 * eps.ln()).sqrt()),
        }
    }

    /// `int_a^b t f(t) dt`, with `b` possibly infinite.
    ///
    /// Rayleigh closed form, with the interval-endpoint terms that the
    /// integration by parts produces:
    ///
    /// ```text
    /// a F'(a) - b F'(b) + sigma sqrt(pi/2) (erfc(a / (sigma sqrt2)) - erfc(b / (sigma sqrt2)))
    /// ```
    ///
    /// where `F'` is the CCDF. The erfc form stays accurate far into the
    /// tail where `cdf` differences would cancel.
    pub fn partial_expectation(&self, a: f64, b: f64) -> Result<f64> {
        if a.is_nan() || b.is_nan() || a < 0.0 {
            return Err(Error::Parameter(format!(
                "interval bounds must satisfy 0 <= a <= b, got a={a}, b={b}"
            )));
        }
        if a > b {
            return Err(Error::Parameter(format!(
                "interval bounds must satisfy a <= b, got a={a} > b={b}"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        match self {
            TteDistribution::Rayleigh { sigma } => {
                let r = std::f64::consts::FRAC_1_SQRT_2 / sigma;
                let mut out =
                    sigma * (std::f64::consts::PI / 2.0).sqrt() * (libm::erfc(a * r) - libm::erfc(b * r));
                out += a * self.ccdf(a);
                // t * ccdf(t) -> 0 as t -> inf; skipping the term avoids inf * 0.
                if b.is_finite() {
                    out -= b * self.ccdf(b);
                }
                Ok(out)
            }
        }
    }
}

// ======================================================================
// tests
// ======================================================================


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn quantile_round_trip(sigma in 0.05f64..50.0, k in 0.01f64..10.0) {
            let d = TteDistribution::rayleigh(sigma).unwrap();
            let t = k * sigma;
            let eps = d.ccdf(t);
            prop_assume!(eps > 0.0 && eps < 1.0);
            let back = d.inverse_ccdf(eps).unwrap();
            prop_assert!((back - t).abs() <= 1e-9 * t.max(sigma));
        }

        #[test]
        fn partial_expectation_is_additive(sigma in 0.1f64..10.0, a in 0.0f64..3.0, da in 0.0f64..3.0, db in 0.0f64..3.0) {
            let d = TteDistribution::rayleigh(sigma).unwrap();
            let (a, b, c) = (a * sigma, (a + da) * sigma, (a + da + db) * sigma);
            let whole = d.partial_expectation(a, c).unwrap();
            let split = d.partial_expectation(a, b).unwrap() + d.partial_expectation(b, c).unwrap();
            prop_assert!((whole - split).abs() <= 1e-12 * d.mean());
        }

        #[test]
        fn full_mass_matches_mean(mean in 0.01f64..100.0) {
            let d = TteDistribution::from_mean(Family::Rayleigh, mean).unwrap();
            let pe = d.partial_expectation(0.0, f64::INFINITY).unwrap();
            prop_assert!((pe - mean).abs() < 1e-8 * mean);
        }
    }

    #[test]
    fn hazard_nondecreasing_on_grid() {
        let d = TteDistribution::from_mean(Family::Rayleigh, 2.0).unwrap();
        let mut prev = -1.0;
        for i in 0..1000 {
            let t = i as f64 * 0.01 * d.sigma();
            let h = d.eval(t).unwrap().hazard;
            assert!(h >= prev, "hazard dropped at t={t}");
            prev = h;
        }
    }

    #[test]
    fn quantile_round_trip_log_grid() {
        let d = TteDistribution::rayleigh(1.3).unwrap();
        let (lo, hi) = (0.01 * d.sigma(), 10.0 * d.sigma());
        for i in 0..=500 {
            let t = lo * (hi / lo).powf(i as f64 / 500.0);
            let back = d.inverse_ccdf(d.ccdf(t)).unwrap();
            assert!(
                (back - t).abs() <= 1e-9 * t,
                "round trip drifted at t={t}: {back}"
            );
        }
    }
}
