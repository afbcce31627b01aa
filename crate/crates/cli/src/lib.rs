//! Experiment runner around `esamp-core`: loads a scenario file, runs one
//! of the solve/evaluate/compare/simulate/sweep commands, and writes the
//! result as JSON or CSV.

use std::fmt;

pub mod commands;
pub mod output;
pub mod scenario;

/// Errors at the tool boundary, each mapped to a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad scenario file, bad flag value, or a schedule that fails its
    /// structural checks. Exit code 4.
    Config(String),
    /// Filesystem or stdout trouble. Exit code 3.
    Io(String),
    /// The solver itself gave up. Bracket and convergence failures exit
    /// with code 2 and carry the bisection trace; anything else the core
    /// reports is a misconfiguration at this boundary, code 4.
    Solver(esamp_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 4,
            CliError::Io(_) => 3,
            CliError::Solver(e) => match e {
                esamp_core::Error::NoValidWindow { .. } | esamp_core::Error::Convergence { .. } => 2,
                _ => 4,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Solver(e) => match e {
                esamp_core::Error::NoValidWindow { .. } => "no_valid_window",
                esamp_core::Error::Convergence { .. } => "convergence",
                _ => "solver",
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Solver(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<esamp_core::Error> for CliError {
    fn from(e: esamp_core::Error) -> Self {
        CliError::Solver(e)
    }
}

// ======================================================================
// tests
// ======================================================================
