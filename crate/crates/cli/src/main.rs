use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use esamp::commands::{self, PolicyChoice, RunContext};
use esamp::output::{self, Format};
use esamp::scenario::Scenario;
use esamp::CliError;

/// Solver and evaluator for energy-optimal aperiodic sampling schedules
/// on battery-powered edge devices.
#[derive(Parser)]
#[command(name = "esamp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario description, TOML.
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Override the scenario's simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the one-line summary on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    /// The solved aperiodic schedule.
    Optimal,
    /// Best single-period policy for the same scenario.
    Periodic,
    /// Fixed period from the scenario's baseline_period.
    Baseline,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the energy-optimal sampling schedule.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Price a schedule from a JSON file under the scenario's weights.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Schedule JSON: a `solve` output file or a bare
        /// {"instants": [...], "tail_instant": ...} object.
        #[arg(long, value_name = "FILE")]
        schedule: PathBuf,
    },
    /// Solve, then compare against optimal-periodic and baseline policies.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo check of a policy on the scenario's device.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = PolicyArg::Optimal)]
        policy: PolicyArg,
        /// Override the scenario's cycle count.
        #[arg(long)]
        cycles: Option<u64>,
    },
    /// Sweep the event-time mean, comparing policies at each point.
    SweepMu {
        #[command(flatten)]
        common: CommonArgs,
        /// Means to visit: "a:b:n" for n evenly spaced points, or "x,y,z".
        #[arg(long, default_value = "1:10:10")]
        grid: String,
    },
    /// Sweep radio delay and power, reporting the reduction at each point.
    SweepComm {
        #[command(flatten)]
        common: CommonArgs,
        /// Communication delays to visit, same syntax as --grid.
        #[arg(long, default_value = "0.001:0.020:5")]
        tau_c_grid: String,
        /// Radio powers to visit, same syntax as --grid.
        #[arg(long, default_value = "0.5:5:5")]
        p_c_grid: String,
    },
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Solve { common }
            | Command::Evaluate { common, .. }
            | Command::Compare { common }
            | Command::Simulate { common, .. }
            | Command::SweepMu { common, .. }
            | Command::SweepComm { common, .. } => common,
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let text = std::fs::read_to_string(&common.scenario)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", common.scenario.display())))?;
    let mut scenario = Scenario::from_toml(&text)?;
    if let Some(seed) = common.seed {
        scenario.sim_seed = seed;
    }
    let ctx = RunContext {
        scenario: &scenario,
        format: match common.format {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        },
        out: common.out.as_deref(),
        quiet: common.quiet,
    };
    match &cli.command {
        Command::Solve { .. } => commands::cmd_solve(&ctx),
        Command::Evaluate { schedule, .. } => commands::cmd_evaluate(&ctx, schedule),
        Command::Compare { .. } => commands::cmd_compare(&ctx),
        Command::Simulate { policy, cycles, .. } => {
            let policy = match policy {
                PolicyArg::Optimal => PolicyChoice::Optimal,
                PolicyArg::Periodic => PolicyChoice::Periodic,
                PolicyArg::Baseline => PolicyChoice::Baseline,
            };
            commands::cmd_simulate(&ctx, policy, *cycles)
        }
        Command::SweepMu { grid, .. } => commands::cmd_sweep_mu(&ctx, grid),
        Command::SweepComm {
            tau_c_grid,
            p_c_grid,
            ..
        } => commands::cmd_sweep_comm(&ctx, tau_c_grid, p_c_grid),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            output::report_error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
