//! Seeded Monte Carlo validation of schedules against the analytic model.
//!
//! Each cycle draws an event time by inverse transform, walks the schedule
//! to find the sample that reports it, and accumulates the per-cycle sample
//! count, wait, penalty, and full device energy. Draws come from a
//! counter-based generator keyed by `(seed, cycle_index)`, so cycle `i`
//! produces the same numbers no matter how many cycles run around it and
//! results are bit-reproducible across machines and shardings.

use crate::dist::TteDistribution;
use crate::schedule::{DeviceProfile, Schedule};
use crate::{Error, Result};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

/// Two-sided 99% normal quantile used for the reported confidence bands.
const Z99: f64 = 2.575_829_303_548_900_4;

/// Draws landing past the tail sample are discarded and redrawn; a cycle
/// burning this many means the schedule covers almost none of the mass.
const MAX_REDRAWS_PER_CYCLE: u32 = 10_000;

/// How one monitoring cycle played out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleOutcome {
    /// Samples spent, the reporting one included.
    pub samples: usize,
    /// Delay from the event to the sample that caught it, seconds.
    pub wait: f64,
}

/// Aggregates over all simulated cycles. Standard errors come straight
/// from the per-cycle variance, so `mean ± ci99` brackets the analytic
/// value in a sound run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub cycles: u64,
    pub seed: u64,
    pub mean_samples: f64,
    pub se_samples: f64,
    pub mean_wait: f64,
    pub se_wait: f64,
    pub mean_penalty: f64,
    pub ci99_penalty: f64,
    pub mean_full_energy: f64,
    pub ci99_full_energy: f64,
    /// Draws that fell beyond the tail sample and were redrawn.
    pub beyond_tail_count: u64,
}

/// Locate the sample that reports an event at `event_time`: the first
/// instant at or past it (intervals are half-open on the left, so an event
/// exactly on an instant is caught by that instant with zero wait). Events
/// beyond the tail sample are outside the schedule's coverage and resolve
/// to `None`.
pub fn resolve_cycle(s: &Schedule, event_time: f64) -> Result<Option<CycleOutcome>> {
    let Some(tail) = s.tail_instant() else {
        return Err(Error::Contract("schedule has no tail sample".into()));
    };
    check_increasing(s.instants(), tail)?;
    if !(event_time >= 0.0) || !event_time.is_finite() {
        return Err(Error::Parameter(format!(
            "event time must be nonnegative and finite, got {event_time}"
        )));
    }
    Ok(resolve_unchecked(s.instants(), tail, event_time))
}

fn resolve_unchecked(instants: &[f64], tail: f64, t: f64) -> Option<CycleOutcome> {
    let idx = instants.partition_point(|&x| x < t);
    if idx < instants.len() {
        Some(CycleOutcome { samples: idx + 1, wait: instants[idx] - t })
    } else if t <= tail {
        Some(CycleOutcome { samples: instants.len() + 1, wait: tail - t })
    } else {
        None
    }
}

fn check_increasing(instants: &[f64], tail: f64) -> Result<()> {
    let mut prev = 0.0;
    for &t in instants.iter().chain(std::iter::once(&tail)) {
        if !t.is_finite() || t <= prev {
            return Err(Error::Contract(format!(
                "sampling instants must increase strictly; {t} follows {prev}"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// Simulate `cycles` independent monitoring cycles of `schedule` on the
/// given device.
///
/// The schedule only needs strictly increasing instants and a tail sample;
/// periodic and deliberately suboptimal schedules are simulatable on
/// purpose. The device's processing delay must fit inside every sampling
/// interval after the first (a sample must be through the backend before
/// the next one lands), which is checked once up front.
///
/// Per cycle, the full device energy combines radio-on time for each
/// sample plus the acknowledgment with idle power for the rest of the
/// cycle: `(S+1)·tau_c·p_c + (T + W + tau_s + 2·tau_c - (S+1)·tau_c)·p_0`.
pub fn simulate(
    d: &TteDistribution,
    device: &DeviceProfile,
    schedule: &Schedule,
    cycles: u64,
    seed: u64,
) -> Result<SimReport> {
    let Some(tail) = schedule.tail_instant() else {
        return Err(Error::Contract("schedule has no tail sample".into()));
    };
    check_increasing(schedule.instants(), tail)?;
    if cycles == 0 {
        return Err(Error::Parameter("at least one cycle is required".into()));
    }
    if let Some(min_gap) = schedule.min_sampling_interval() {
        if device.tau_s >= min_gap {
            return Err(Error::Contract(format!(
                "processing delay tau_s = {} does not fit the smallest sampling interval {}",
                device.tau_s, min_gap
            )));
        }
    }

    let w = device.weights();
    let mut samples = Welford::default();
    let mut wait = Welford::default();
    let mut penalty = Welford::default();
    let mut full_energy = Welford::default();
    let mut beyond_tail_count = 0u64;

    let base = ChaCha12Rng::seed_from_u64(seed);
    for cycle in 0..cycles {
        let mut rng = base.clone();
        rng.set_stream(cycle);
        let mut redraws = 0u32;
        let (t, outcome) = loop {
            // 53-bit mantissa draw in [0, 1); zero would map to an
            // infinite event time, so it counts as beyond-tail too
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                let t = d.inverse_ccdf(u)?;
                if let Some(outcome) = resolve_unchecked(schedule.instants(), tail, t) {
                    break (t, outcome);
                }
            }
            beyond_tail_count += 1;
            redraws += 1;
            if redraws >= MAX_REDRAWS_PER_CYCLE {
                return Err(Error::Resource(format!(
                    "cycle {cycle} exceeded {MAX_REDRAWS_PER_CYCLE} redraws; the tail sample \
                     at {tail} covers too little event mass"
                )));
            }
        };
        let s = outcome.samples as f64;
        samples.push(s);
        wait.push(outcome.wait);
        penalty.push(w.alpha * s + w.beta * outcome.wait);
        let radio = (s + 1.0) * device.tau_c;
        full_energy.push(
            radio * device.p_c
                + (t + outcome.wait + device.tau_s + 2.0 * device.tau_c - radio) * device.p_0,
        );
    }

    Ok(SimReport {
        cycles,
        seed,
        mean_samples: samples.mean,
        se_samples: samples.se(),
        mean_wait: wait.mean,
        se_wait: wait.se(),
        mean_penalty: penalty.mean,
        ci99_penalty: Z99 * penalty.se(),
        mean_full_energy: full_energy.mean,
        ci99_full_energy: Z99 * full_energy.se(),
        beyond_tail_count,
    })
}

/// Streaming mean and variance (Welford's update).
#[derive(Debug, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d1 = x - self.mean;
        self.mean += d1 / self.n;
        self.m2 += d1 * (x - self.mean);
    }

    fn se(&self) -> f64 {
        if self.n < 2.0 {
            return f64::INFINITY;
        }
        (self.m2 / (self.n * (self.n - 1.0))).sqrt()
    }
}

// ======================================================================
// tests
// ======================================================================
