//! Scenario files: one TOML document describing the distribution, the
//! device (or bare penalty weights), solver knobs, and simulation settings.
//!
//! The schema is versioned and strict: unknown keys are rejected so a typo
//! cannot silently fall back to a default. Either a `[device]` table or a
//! `[weights]` table must be present, never both; weights given directly
//! are treated as normalized (alpha in joules per discarded sample, beta in
//! watts, comparisons unaffected by the absolute scale).

use esamp_core::{DeviceProfile, Family, PenaltyWeights, SolverConfig, TteDistribution};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Raw TOML shape, prior to validation.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    distribution: DistSection,
    device: Option<DeviceSection>,
    weights: Option<WeightsSection>,
    baseline_period: Option<f64>,
    solver: Option<SolverSection>,
    sim: Option<SimSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistSection {
    family: String,
    mean: Option<f64>,
    sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub tau_c: f64,
    pub tau_s: f64,
    pub p_c: f64,
    pub p_0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsSection {
    alpha: f64,
    beta: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    horizon_multiplier: Option<f64>,
    eps: Option<f64>,
    t1_tolerance: Option<f64>,
    max_iterations: Option<usize>,
    bracket: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    cycles: Option<u64>,
    seed: Option<u64>,
}

pub const DEFAULT_BASELINE_PERIOD: f64 = 0.0833;
pub const DEFAULT_SIM_CYCLES: u64 = 1_000_000;

/// Fully validated scenario with core types constructed.
#[derive(Debug)]
pub struct Scenario {
    pub dist: TteDistribution,
    pub weights: PenaltyWeights,
    pub device: Option<DeviceProfile>,
    /// Weights were given directly rather than derived from a device.
    pub normalized_weights: bool,
    pub solver: SolverConfig,
    pub baseline_period: f64,
    pub sim_cycles: u64,
    pub sim_seed: u64,
}

/// What goes into every output file under `scenario_echo`: the scenario as
/// resolved, including derived weights and defaulted fields.
#[derive(Debug, Serialize)]
pub struct ScenarioEcho {
    pub family: &'static str,
    pub mean: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub normalized_weights: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub device: Option<DeviceSection>,
    pub solver: SolverConfig,
    pub baseline_period: f64,
    pub sim_cycles: u64,
    pub sim_seed: u64,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario, CliError> {
        let raw: ScenarioFile = toml::from_str(text)
            .map_err(|e| CliError::Config(format!("scenario parse error: {e}")))?;
        raw.resolve()
    }

    pub fn echo(&self) -> ScenarioEcho {
        ScenarioEcho {
            family: "rayleigh",
            mean: self.dist.mean(),
            sigma: self.dist.sigma(),
            alpha: self.weights.alpha,
            beta: self.weights.beta,
            normalized_weights: self.normalized_weights,
            device: self.device.map(|d| DeviceSection {
                tau_c: d.tau_c,
                tau_s: d.tau_s,
                p_c: d.p_c,
                p_0: d.p_0,
            }),
            solver: self.solver,
            baseline_period: self.baseline_period,
            sim_cycles: self.sim_cycles,
            sim_seed: self.sim_seed,
        }
    }
}

impl ScenarioFile {
    fn resolve(self) -> Result<Scenario, CliError> {
        if self.schema_version != 1 {
            return Err(CliError::Config(format!(
                "unsupported schema_version {}, this build reads version 1",
                self.schema_version
            )));
        }

        if self.distribution.family != "rayleigh" {
            return Err(CliError::Config(format!(
                "distribution.family: unknown family {:?}, expected \"rayleigh\"",
                self.distribution.family
            )));
        }
        let dist = match (self.distribution.mean, self.distribution.sigma) {
            (Some(mean), None) => TteDistribution::from_mean(Family::Rayleigh, mean),
            (None, Some(sigma)) => TteDistribution::rayleigh(sigma),
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "distribution: give either mean or sigma, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "distribution: one of mean or sigma is required".into(),
                ))
            }
        }
        .map_err(|e| CliError::Config(format!("distribution: {e}")))?;

        let (weights, device, normalized_weights) = match (&self.device, &self.weights) {
            (Some(dev), None) => {
                let profile = DeviceProfile::new(dev.tau_c, dev.tau_s, dev.p_c, dev.p_0)
                    .map_err(|e| CliError::Config(format!("device: {e}")))?;
                (profile.weights(), Some(profile), false)
            }
            (None, Some(ws)) => {
                let w = PenaltyWeights::new(ws.alpha, ws.beta)
                    .map_err(|e| CliError::Config(format!("weights: {e}")))?;
                (w, None, true)
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either [device] or [weights], not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "one of [device] or [weights] is required".into(),
                ))
            }
        };

        let s = self.solver.unwrap_or_default();
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            horizon_multiplier: s.horizon_multiplier.unwrap_or(defaults.horizon_multiplier),
            eps: s.eps.unwrap_or(defaults.eps),
            bracket: s.bracket.map(|[lo, hi]| (lo, hi)),
            t1_tolerance: s.t1_tolerance,
            max_iterations: s.max_iterations.unwrap_or(defaults.max_iterations),
        };
        solver
            .validate()
            .map_err(|e| CliError::Config(format!("solver: {e}")))?;

        let baseline_period = self.baseline_period.unwrap_or(DEFAULT_BASELINE_PERIOD);
        if !(baseline_period > 0.0) || !baseline_period.is_finite() {
            return Err(CliError::Config(format!(
                "baseline_period must be positive, got {baseline_period}"
            )));
        }

        let sim = self.sim.unwrap_or_default();
        let sim_cycles = sim.cycles.unwrap_or(DEFAULT_SIM_CYCLES);
        if sim_cycles == 0 {
            return Err(CliError::Config("sim.cycles must be at least 1".into()));
        }

        Ok(Scenario {
            dist,
            weights,
            device,
            normalized_weights,
            solver,
            baseline_period,
            sim_cycles,
            sim_seed: sim.seed.unwrap_or(0),
        })
    }
}

// ======================================================================
// tests
// ======================================================================
