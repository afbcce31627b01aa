//! One function per subcommand. Each computes a typed results struct,
//! renders it in the requested format, writes it, and prints a one-line
//! summary on stderr.

use std::path::Path;

use esamp_core::{
    optimal_period, penalty_of_instants, periodic_penalty_components, simulate, solve,
    DeviceProfile, Family, PenaltyBreakdown, PenaltyWeights, PeriodicPolicy, Schedule,
    SearchRange, SimReport, SolverConfig, TteDistribution,
};
use serde::Serialize;
use serde_json::Value;

use crate::output::{emit, fmt_f64, render_json, require_field, CsvTable, Format};
use crate::scenario::Scenario;
use crate::CliError;

pub struct RunContext<'a> {
    pub scenario: &'a Scenario,
    pub format: Format,
    pub out: Option<&'a Path>,
    pub quiet: bool,
}

impl RunContext<'_> {
    fn finish<R: Serialize>(
        &self,
        command: &str,
        results: &R,
        csv: CsvTable,
        summary: String,
    ) -> Result<(), CliError> {
        let text = match self.format {
            Format::Json => render_json(command, &self.scenario.echo(), results)?,
            Format::Csv => csv.render(),
        };
        emit(self.out, &text)?;
        if !self.quiet {
            eprintln!("{summary}");
        }
        Ok(())
    }
}

/// Percentage saved by policy `a` relative to policy `b`.
pub fn reduction_pct(penalty_a: f64, penalty_b: f64) -> f64 {
    100.0 * (1.0 - penalty_a / penalty_b)
}

/// Grid syntax: `a:b:n` for n points evenly spaced from a to b, or an
/// explicit comma list `x,y,z`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let number = |s: &str| -> Result<f64, CliError> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("grid: {:?} is not a number", s.trim())))?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("grid: {v} is not finite")));
        }
        Ok(v)
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Config(format!(
                "grid: expected a:b:n, got {spec:?}"
            )));
        }
        let a = number(parts[0])?;
        let b = number(parts[1])?;
        let n: usize = parts[2].trim().parse().map_err(|_| {
            CliError::Config(format!("grid: point count {:?} is not an integer", parts[2]))
        })?;
        if n == 0 {
            return Err(CliError::Config("grid: point count must be at least 1".into()));
        }
        if n == 1 {
            return Ok(vec![a]);
        }
        Ok((0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect())
    } else {
        let pts: Result<Vec<f64>, CliError> = spec.split(',').map(|s| number(s)).collect();
        let pts = pts?;
        if pts.is_empty() {
            return Err(CliError::Config("grid: no points given".into()));
        }
        Ok(pts)
    }
}

// ======================================================================
// solve
// ======================================================================

#[derive(Serialize)]
struct SolveResults {
    t1_star: f64,
    iterations: usize,
    degraded: bool,
    breakdown: PenaltyBreakdown,
    n_instants: usize,
    min_sampling_interval: Option<f64>,
    schedule: Schedule,
}

pub fn cmd_solve(ctx: &RunContext) -> Result<(), CliError> {
    let sc = ctx.scenario;
    let r = solve(&sc.dist, &sc.weights, &sc.solver)?;

    let mut csv = CsvTable::new(vec!["n", "t_s", "is_tail"]);
    for (i, &t) in r.schedule.instants().iter().enumerate() {
        csv.push_row(vec![(i + 1).to_string(), fmt_f64(t), "false".into()]);
    }
    let tail = r.schedule.tail_instant().expect("solve always appends a tail");
    csv.push_row(vec![
        (r.schedule.len() + 1).to_string(),
        fmt_f64(tail),
        "true".into(),
    ]);

    let summary = format!(
        "solve: t1*={:.9} penalty={:.9} samples={:.6} wait={:.6} n={} iterations={}{}",
        r.t1_star,
        r.breakdown.penalty,
        r.breakdown.expected_samples,
        r.breakdown.expected_wait,
        r.schedule.len(),
        r.iterations,
        if r.degraded { " (degraded: horizon not reached)" } else { "" },
    );
    let results = SolveResults {
        t1_star: r.t1_star,
        iterations: r.iterations,
        degraded: r.degraded,
        breakdown: r.breakdown,
        n_instants: r.schedule.len(),
        min_sampling_interval: r.schedule.min_sampling_interval(),
        schedule: r.schedule,
    };
    ctx.finish("solve", &results, csv, summary)
}

// ======================================================================
// evaluate
// ======================================================================

#[derive(Serialize)]
struct EvaluateResults {
    n_instants: usize,
    tail_instant: f64,
    breakdown: PenaltyBreakdown,
}

/// Accepts a bare schedule object, a `solve` output file, or anything that
/// nests the schedule under `results.schedule` or `schedule`.
pub fn extract_schedule(doc: &Value) -> Result<(Vec<f64>, f64), CliError> {
    let node = doc
        .get("results")
        .and_then(|r| r.get("schedule"))
        .or_else(|| doc.get("schedule"))
        .unwrap_or(doc);
    let instants = require_field(node, "instants")?
        .as_array()
        .ok_or_else(|| CliError::Config("schedule field \"instants\" must be an array".into()))?
        .iter()
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| CliError::Config(format!("schedule instant {v} is not a number")))
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    let tail = require_field(node, "tail_instant")?
        .as_f64()
        .ok_or_else(|| CliError::Config("schedule field \"tail_instant\" must be a number".into()))?;
    Ok((instants, tail))
}

pub fn cmd_evaluate(ctx: &RunContext, schedule_path: &Path) -> Result<(), CliError> {
    let sc = ctx.scenario;
    let text = std::fs::read_to_string(schedule_path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", schedule_path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("schedule parse error: {e}")))?;
    let (instants, tail) = extract_schedule(&doc)?;

    let structural = Schedule::from_instants(instants.clone())?;
    if !structural.is_valid() {
        return Err(CliError::Config(format!(
            "schedule is not admissible: {:?}",
            structural.classification()
        )));
    }
    let breakdown = penalty_of_instants(&sc.dist, &sc.weights, &instants, tail)?;

    let mut csv = CsvTable::new(vec![
        "n_instants",
        "tail_instant",
        "expected_samples",
        "expected_wait",
        "penalty",
        "truncation_bound",
    ]);
    csv.push_row(vec![
        instants.len().to_string(),
        fmt_f64(tail),
        fmt_f64(breakdown.expected_samples),
        fmt_f64(breakdown.expected_wait),
        fmt_f64(breakdown.penalty),
        fmt_f64(breakdown.truncation_bound),
    ]);
    let summary = format!(
        "evaluate: penalty={:.9} samples={:.6} wait={:.6} over {} instants + tail",
        breakdown.penalty,
        breakdown.expected_samples,
        breakdown.expected_wait,
        instants.len(),
    );
    let results = EvaluateResults {
        n_instants: instants.len(),
        tail_instant: tail,
        breakdown,
    };
    ctx.finish("evaluate", &results, csv, summary)
}

// ======================================================================
// compare
// ======================================================================

#[derive(Serialize)]
struct AperiodicSide {
    t1_star: f64,
    degraded: bool,
    n_instants: usize,
    breakdown: PenaltyBreakdown,
}

#[derive(Serialize)]
struct PeriodicSide {
    period: f64,
    breakdown: PenaltyBreakdown,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary_warning: Option<bool>,
}

#[derive(Serialize)]
struct CompareResults {
    aperiodic: AperiodicSide,
    optimal_periodic: PeriodicSide,
    baseline_periodic: PeriodicSide,
    reduction_vs_optimal_periodic_pct: f64,
    reduction_vs_baseline_pct: f64,
}

fn compare_point(
    dist: &TteDistribution,
    weights: &PenaltyWeights,
    solver: &SolverConfig,
    baseline_period: f64,
) -> Result<CompareResults, CliError> {
    let r = solve(dist, weights, solver)?;
    let search = optimal_period(dist, weights, &SearchRange::default_for(dist))?;
    let baseline = PeriodicPolicy::new(baseline_period)?;
    let baseline_breakdown = periodic_or_config(dist, weights, &baseline)?;

    Ok(CompareResults {
        reduction_vs_optimal_periodic_pct: reduction_pct(
            r.breakdown.penalty,
            search.breakdown.penalty,
        ),
        reduction_vs_baseline_pct: reduction_pct(r.breakdown.penalty, baseline_breakdown.penalty),
        aperiodic: AperiodicSide {
            t1_star: r.t1_star,
            degraded: r.degraded,
            n_instants: r.schedule.len(),
            breakdown: r.breakdown,
        },
        optimal_periodic: PeriodicSide {
            period: search.policy.period,
            breakdown: search.breakdown,
            boundary_warning: Some(search.boundary_warning),
        },
        baseline_periodic: PeriodicSide {
            period: baseline_period,
            breakdown: baseline_breakdown,
            boundary_warning: None,
        },
    })
}

/// A baseline period too short for the series cap is a scenario problem,
/// not a solver failure.
fn periodic_or_config(
    dist: &TteDistribution,
    weights: &PenaltyWeights,
    policy: &PeriodicPolicy,
) -> Result<PenaltyBreakdown, CliError> {
    periodic_penalty_components(dist, weights, policy)
        .map_err(|e| CliError::Config(format!("baseline period {}: {e}", policy.period)))
}

const COMPARE_HEADER: [&str; 8] = [
    "t1_star",
    "aperiodic_penalty",
    "optimal_period",
    "optimal_periodic_penalty",
    "baseline_period",
    "baseline_penalty",
    "reduction_vs_optimal_periodic_pct",
    "reduction_vs_baseline_pct",
];

fn compare_row(c: &CompareResults) -> Vec<String> {
    vec![
        fmt_f64(c.aperiodic.t1_star),
        fmt_f64(c.aperiodic.breakdown.penalty),
        fmt_f64(c.optimal_periodic.period),
        fmt_f64(c.optimal_periodic.breakdown.penalty),
        fmt_f64(c.baseline_periodic.period),
        fmt_f64(c.baseline_periodic.breakdown.penalty),
        fmt_f64(c.reduction_vs_optimal_periodic_pct),
        fmt_f64(c.reduction_vs_baseline_pct),
    ]
}

pub fn cmd_compare(ctx: &RunContext) -> Result<(), CliError> {
    let sc = ctx.scenario;
    let c = compare_point(&sc.dist, &sc.weights, &sc.solver, sc.baseline_period)?;

    let mut csv = CsvTable::new(COMPARE_HEADER.to_vec());
    csv.push_row(compare_row(&c));
    let summary = format!(
        "compare: aperiodic={:.6} optimal-periodic={:.6} (T={:.6}) baseline={:.6} (T={}) reductions {:.3}% / {:.3}%",
        c.aperiodic.breakdown.penalty,
        c.optimal_periodic.breakdown.penalty,
        c.optimal_periodic.period,
        c.baseline_periodic.breakdown.penalty,
        sc.baseline_period,
        c.reduction_vs_optimal_periodic_pct,
        c.reduction_vs_baseline_pct,
    );
    ctx.finish("compare", &c, csv, summary)
}

// ======================================================================
// simulate
// ======================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    Optimal,
    Periodic,
    Baseline,
}

impl PolicyChoice {
    fn name(self) -> &'static str {
        match self {
            PolicyChoice::Optimal => "optimal",
            PolicyChoice::Periodic => "periodic",
            PolicyChoice::Baseline => "baseline",
        }
    }
}

#[derive(Serialize)]
struct SimulateResults {
    policy: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    t1_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    period: Option<f64>,
    analytic: PenaltyBreakdown,
    report: SimReport,
}

pub fn cmd_simulate(
    ctx: &RunContext,
    policy: PolicyChoice,
    cycles_override: Option<u64>,
) -> Result<(), CliError> {
    let sc = ctx.scenario;
    let Some(device) = sc.device else {
        return Err(CliError::Config(
            "simulate needs a [device] table; bare [weights] lack the delays and powers the cycle model uses".into(),
        ));
    };
    let cycles = cycles_override.unwrap_or(sc.sim_cycles);

    let (schedule, analytic, t1_star, period) = match policy {
        PolicyChoice::Optimal => {
            let r = solve(&sc.dist, &sc.weights, &sc.solver)?;
            (r.schedule, r.breakdown, Some(r.t1_star), None)
        }
        PolicyChoice::Periodic => {
            let search = optimal_period(&sc.dist, &sc.weights, &SearchRange::default_for(&sc.dist))?;
            let s = periodic_schedule(sc, search.policy.period)?;
            (s, search.breakdown, None, Some(search.policy.period))
        }
        PolicyChoice::Baseline => {
            let policy = PeriodicPolicy::new(sc.baseline_period)?;
            let analytic = periodic_or_config(&sc.dist, &sc.weights, &policy)?;
            let s = periodic_schedule(sc, sc.baseline_period)?;
            (s, analytic, None, Some(sc.baseline_period))
        }
    };

    let report = simulate(&sc.dist, &device, &schedule, cycles, sc.sim_seed)?;

    let mut csv = CsvTable::new(vec![
        "policy",
        "cycles",
        "seed",
        "t1_star",
        "period",
        "analytic_penalty",
        "mean_penalty",
        "ci99_penalty",
        "mean_samples",
        "se_samples",
        "mean_wait",
        "se_wait",
        "mean_full_energy",
        "ci99_full_energy",
        "beyond_tail_count",
    ]);
    csv.push_row(vec![
        policy.name().into(),
        cycles.to_string(),
        sc.sim_seed.to_string(),
        t1_star.map(fmt_f64).unwrap_or_default(),
        period.map(fmt_f64).unwrap_or_default(),
        fmt_f64(analytic.penalty),
        fmt_f64(report.mean_penalty),
        fmt_f64(report.ci99_penalty),
        fmt_f64(report.mean_samples),
        fmt_f64(report.se_samples),
        fmt_f64(report.mean_wait),
        fmt_f64(report.se_wait),
        fmt_f64(report.mean_full_energy),
        fmt_f64(report.ci99_full_energy),
        report.beyond_tail_count.to_string(),
    ]);
    let summary = format!(
        "simulate({}): penalty {:.6} +- {:.6} over {} cycles (analytic {:.6}), full energy {:.6} J/cycle",
        policy.name(),
        report.mean_penalty,
        report.ci99_penalty,
        cycles,
        analytic.penalty,
        report.mean_full_energy,
    );
    let results = SimulateResults {
        policy: policy.name(),
        t1_star,
        period,
        analytic,
        report,
    };
    ctx.finish("simulate", &results, csv, summary)
}

/// Periodic schedule covering the solver horizon, with the same tail rule
/// the solver uses.
fn periodic_schedule(sc: &Scenario, period: f64) -> Result<Schedule, CliError> {
    let horizon = sc.solver.horizon_multiplier * sc.dist.mean();
    let tail = sc.dist.inverse_ccdf(sc.solver.eps)?;
    Schedule::periodic(period, horizon, tail).map_err(|e| {
        CliError::Config(format!(
            "periodic schedule at T={period} does not fit under the tail sample: {e}"
        ))
    })
}

// ======================================================================
// sweep-mu
// ======================================================================

#[derive(Serialize)]
struct MuRow {
    mean: f64,
    t1_star: f64,
    aperiodic_penalty: f64,
    optimal_period: f64,
    optimal_periodic_penalty: f64,
    baseline_penalty: f64,
    reduction_vs_optimal_periodic_pct: f64,
    reduction_vs_baseline_pct: f64,
}

#[derive(Serialize)]
struct MuSweepResults {
    grid: Vec<f64>,
    baseline_period: f64,
    rows: Vec<MuRow>,
}

pub fn cmd_sweep_mu(ctx: &RunContext, grid_spec: &str) -> Result<(), CliError> {
    let sc = ctx.scenario;
    let grid = parse_grid(grid_spec)?;

    let mut rows = Vec::with_capacity(grid.len());
    for &mean in &grid {
        let dist = TteDistribution::from_mean(Family::Rayleigh, mean)
            .map_err(|e| CliError::Config(format!("sweep point mean={mean}: {e}")))?;
        let c = compare_point(&dist, &sc.weights, &sc.solver, sc.baseline_period)?;
        rows.push(MuRow {
            mean,
            t1_star: c.aperiodic.t1_star,
            aperiodic_penalty: c.aperiodic.breakdown.penalty,
            optimal_period: c.optimal_periodic.period,
            optimal_periodic_penalty: c.optimal_periodic.breakdown.penalty,
            baseline_penalty: c.baseline_periodic.breakdown.penalty,
            reduction_vs_optimal_periodic_pct: c.reduction_vs_optimal_periodic_pct,
            reduction_vs_baseline_pct: c.reduction_vs_baseline_pct,
        });
    }

    let mut csv = CsvTable::new(vec![
        "mean",
        "t1_star",
        "aperiodic_penalty",
        "optimal_period",
        "optimal_periodic_penalty",
        "baseline_penalty",
        "reduction_vs_optimal_periodic_pct",
        "reduction_vs_baseline_pct",
    ]);
    for r in &rows {
        csv.push_row(vec![
            fmt_f64(r.mean),
            fmt_f64(r.t1_star),
            fmt_f64(r.aperiodic_penalty),
            fmt_f64(r.optimal_period),
            fmt_f64(r.optimal_periodic_penalty),
            fmt_f64(r.baseline_penalty),
            fmt_f64(r.reduction_vs_optimal_periodic_pct),
            fmt_f64(r.reduction_vs_baseline_pct),
        ]);
    }
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| {
        (
            acc.0.min(r.reduction_vs_optimal_periodic_pct),
            acc.1.max(r.reduction_vs_optimal_periodic_pct),
        )
    });
    let summary = format!(
        "sweep-mu: {} points, reduction vs optimal periodic {:.3}%..{:.3}%",
        rows.len(),
        lo,
        hi,
    );
    let results = MuSweepResults {
        grid,
        baseline_period: sc.baseline_period,
        rows,
    };
    ctx.finish("sweep-mu", &results, csv, summary)
}

// ======================================================================
// sweep-comm
// ======================================================================

#[derive(Serialize)]
struct CommRow {
    tau_c: f64,
    p_c: f64,
    alpha: f64,
    beta: f64,
    t1_star: f64,
    aperiodic_penalty: f64,
    optimal_period: f64,
    optimal_periodic_penalty: f64,
    reduction_vs_optimal_periodic_pct: f64,
}

#[derive(Serialize)]
struct CommSweepResults {
    tau_c_grid: Vec<f64>,
    p_c_grid: Vec<f64>,
    rows: Vec<CommRow>,
}

pub fn cmd_sweep_comm(
    ctx: &RunContext,
    tau_c_spec: &str,
    p_c_spec: &str,
) -> Result<(), CliError> {
    let sc = ctx.scenario;
    let Some(base) = sc.device else {
        return Err(CliError::Config(
            "sweep-comm needs a [device] table to supply tau_s and p_0".into(),
        ));
    };
    let tau_c_grid = parse_grid(tau_c_spec)?;
    let p_c_grid = parse_grid(p_c_spec)?;

    let mut rows = Vec::with_capacity(tau_c_grid.len() * p_c_grid.len());
    for &tau_c in &tau_c_grid {
        for &p_c in &p_c_grid {
            let device = DeviceProfile::new(tau_c, base.tau_s, p_c, base.p_0).map_err(|e| {
                CliError::Config(format!("sweep point tau_c={tau_c}, p_c={p_c}: {e}"))
            })?;
            let weights = device.weights();
            let r = solve(&sc.dist, &weights, &sc.solver)?;
            let search = optimal_period(&sc.dist, &weights, &SearchRange::default_for(&sc.dist))?;
            rows.push(CommRow {
                tau_c,
                p_c,
                alpha: weights.alpha,
                beta: weights.beta,
                t1_star: r.t1_star,
                aperiodic_penalty: r.breakdown.penalty,
                optimal_period: search.policy.period,
                optimal_periodic_penalty: search.breakdown.penalty,
                reduction_vs_optimal_periodic_pct: reduction_pct(
                    r.breakdown.penalty,
                    search.breakdown.penalty,
                ),
            });
        }
    }

    let mut csv = CsvTable::new(vec![
        "tau_c",
        "p_c",
        "alpha",
        "beta",
        "t1_star",
        "aperiodic_penalty",
        "optimal_period",
        "optimal_periodic_penalty",
        "reduction_vs_optimal_periodic_pct",
    ]);
    for r in &rows {
        csv.push_row(vec![
            fmt_f64(r.tau_c),
            fmt_f64(r.p_c),
            fmt_f64(r.alpha),
            fmt_f64(r.beta),
            fmt_f64(r.t1_star),
            fmt_f64(r.aperiodic_penalty),
            fmt_f64(r.optimal_period),
            fmt_f64(r.optimal_periodic_penalty),
            fmt_f64(r.reduction_vs_optimal_periodic_pct),
        ]);
    }
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| {
        (
            acc.0.min(r.reduction_vs_optimal_periodic_pct),
            acc.1.max(r.reduction_vs_optimal_periodic_pct),
        )
    });
    let summary = format!(
        "sweep-comm: {} points, reduction vs optimal periodic {:.3}%..{:.3}% (spread {:.3}pp)",
        rows.len(),
        lo,
        hi,
        hi - lo,
    );
    let results = CommSweepResults {
        tau_c_grid,
        p_c_grid,
        rows,
    };
    ctx.finish("sweep-comm", &results, csv, summary)
}

// ======================================================================
// tests
// ======================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse_both_spellings() {
        assert_eq!(parse_grid("1:10:10").unwrap().len(), 10);
        assert_eq!(parse_grid("1:10:10").unwrap()[0], 1.0);
        assert_eq!(parse_grid("1:10:10").unwrap()[9], 10.0);
        assert_eq!(parse_grid("0.5, 1.5,2.5").unwrap(), vec![0.5, 1.5, 2.5]);
        assert_eq!(parse_grid("2:8:1").unwrap(), vec![2.0]);
        let pts = parse_grid("0.001:0.020:5").unwrap();
        assert_eq!(pts.len(), 5);
        assert!((pts[1] - 0.00575).abs() < 1e-15);
    }

    #[test]
    fn bad_grids_are_config_errors() {
        for spec in ["", "1:10", "1:10:0", "1:10:2:4", "a,b", "1:inf:3"] {
            let err = parse_grid(spec).unwrap_err();
            assert_eq!(err.exit_code(), 4, "spec {spec:?}");
        }
    }

    #[test]
    fn reduction_is_relative_to_the_second_argument() {
        assert_eq!(reduction_pct(90.0, 100.0), 100.0 * (1.0 - 0.9));
        assert!(reduction_pct(100.0, 90.0) < 0.0);
    }

    #[test]
    fn schedule_extraction_tries_nested_paths_first() {
        let bare = serde_json::json!({"instants": [0.5, 1.0], "tail_instant": 4.0});
        let wrapped = serde_json::json!({"schedule": {"instants": [0.5], "tail_instant": 2.0}});
        let solve_doc = serde_json::json!({
            "results": {"schedule": {"instants": [0.25], "tail_instant": 1.0}},
            "schedule": {"instants": [9.0], "tail_instant": 10.0},
        });
        assert_eq!(extract_schedule(&bare).unwrap(), (vec![0.5, 1.0], 4.0));
        assert_eq!(extract_schedule(&wrapped).unwrap(), (vec![0.5], 2.0));
        assert_eq!(extract_schedule(&solve_doc).unwrap(), (vec![0.25], 1.0));

        let missing = serde_json::json!({"instants": [0.5]});
        let err = extract_schedule(&missing).unwrap_err();
        assert!(err.to_string().contains("tail_instant"));
    }
}
