//! Energy-optimal sampling schedules for event-driven edge monitoring.
//!
//! A wearable or IoT terminal repeatedly samples its environment until an
//! event of random duration completes, then transmits the successful sample
//! and waits for feedback. Every discarded sample costs radio energy, every
//! second of post-event waiting costs idle power, so the spacing of the
//! sampling instants is an energy trade-off: sample densely and waste radio
//! energy, sample sparsely and waste idle energy.
//!
//! This crate models the event duration (time to event, TTE) as a Rayleigh
//! random variable and computes the aperiodic sampling schedule that
//! minimizes the expected energy penalty
//!
//! ```text
//! eps = alpha * E[S] + beta * E[W]
//! ```
//!
//! where `S` counts samples per cycle, `W` is the wait between the event and
//! the next sample, `alpha` is the energy burned per discarded sample and
//! `beta` the idle power. The crate also evaluates the two natural
//! comparators (the best fixed-period policy and an arbitrary fixed-period
//! baseline) and validates all analytic numbers with a seeded, reproducible
//! Monte Carlo simulator.
//!
//! Module map:
//!
//! * [`dist`]: the TTE model (density, CDF, CCDF, hazard, quantile, partial
//!   expectation).
//! * [`schedule`]: candidate schedules from the recursive optimality
//!   condition, with validity classification.
//! * [`penalty`]: analytic expected-penalty evaluation and optimality
//!   diagnostics.
//! * [`solver`]: bisection over the first sampling instant.
//! * [`comparators`]: periodic policies (optimal and fixed baseline).
//! * [`sim`]: renewal-cycle Monte Carlo with per-cycle random substreams.

pub mod comparators;
pub mod dist;
pub mod penalty;
pub mod schedule;
pub mod sim;
pub mod solver;

pub use comparators::{
    optimal_period, periodic_penalty_components, PeriodicPolicy, PeriodicSearch, SearchRange,
};
pub use dist::{EvalPoint, Family, TteDistribution};
pub use penalty::{
    penalty_components, penalty_of_instants, stationarity_residual, truncation_error_bound,
    PenaltyBreakdown,
};
pub use schedule::{
    generate, next_instant, next_instant_generic, Classification, DeviceProfile, PenaltyWeights,
    Schedule,
};
pub use sim::{resolve_cycle, simulate, CycleOutcome, SimReport};
pub use solver::{initial_bracket, solve, BracketStep, SolverConfig, SolverResult};

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violates a documented precondition (wrong sign, empty
    /// range, index out of bounds, ...).
    Parameter(String),
    /// A function of time was evaluated outside its domain `t >= 0`.
    Domain(String),
    /// Division by a vanishing density.
    Singularity(String),
    /// An exponential argument too large to evaluate; the recursion has
    /// already diverged when this fires.
    Overflow(String),
    /// Bracket expansion could not enclose a sign change of the sequence
    /// classification, so no valid first instant exists in the searched
    /// range.
    NoValidWindow { low: f64, high: f64, detail: String },
    /// Bisection ran out of iterations before the bracket collapsed.
    Convergence {
        iterations: usize,
        trace: Vec<solver::BracketStep>,
    },
    /// The requested computation would need an unreasonable amount of work
    /// (for example a periodic sum with more than 1e9 terms).
    Resource(String),
    /// An input object does not satisfy the contract of the operation it
    /// was passed to (invalid schedule, missing tail, processing delay
    /// longer than a sampling interval, ...).
    Contract(String),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::Parameter(m) => write!(f, "parameter error: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Singularity(m) => write!(f, "singularity: {m}"),
            Error::Overflow(m) => write!(f, "overflow: {m}"),
            Error::NoValidWindow { low, high, detail } => write!(
                f,
                "no valid first-instant window found (last bracket [{low}, {high}]): {detail}"
            ),
            Error::Convergence { iterations, .. } => {
                write!(f, "bisection did not converge within {iterations} iterations")
            }
            Error::Resource(m) => write!(f, "resource limit: {m}"),
            Error::Contract(m) => write!(f, "contract violation: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
