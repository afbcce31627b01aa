//! Acceptance gate: ten end-to-end checks, one per release criterion.
//! Each test prints a single line with the measured values next to the
//! allowed window, and asserts carry both so a failure is self-describing.
//!
//! Numbers marked "reference" were produced by an independent arbitrary-
//! precision implementation of the same formulas and are pinned here at
//! tolerances that survive libm differences.

use std::time::{Duration, Instant};

use esamp_core::{
    next_instant, optimal_period, penalty_of_instants, periodic_penalty_components, simulate,
    solve, stationarity_residual, truncation_error_bound, DeviceProfile, Family, PenaltyWeights,
    PeriodicPolicy, SearchRange, SolverConfig, TteDistribution,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn unit_dist() -> TteDistribution {
    TteDistribution::from_mean(Family::Rayleigh, 1.0).unwrap()
}

fn glass_device() -> DeviceProfile {
    DeviceProfile::new(0.00585, 0.001, 2.96, 0.334).unwrap()
}

fn assert_budget(elapsed: Duration, budget: Duration, what: &str) {
    assert!(
        elapsed <= budget,
        "{what} took {elapsed:.2?}, budget {budget:.2?}"
    );
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

fn reduction_pct(a: f64, b: f64) -> f64 {
    100.0 * (1.0 - a / b)
}

// ======================================================================
// a01. Fifteen-instant window at unit mean
// ======================================================================

/// With the horizon pulled in so the schedule spans exactly 15 samples,
/// the solved first instant must land in [0.5815, 0.5830] s and the
/// schedule must be valid. The published window also pins the 15th
/// instant at 2.8 s +- 0.05 s; the recursion that satisfies every other
/// part of this criterion puts it near 2.926 s (the 14th lands near
/// 2.83 s), so that assert is expected to fail until the discrepancy in
/// the published figure is resolved. It is kept failing on purpose.
#[test]
fn a01_fifteen_instant_window_at_unit_mean() {
    let start = Instant::now();
    let d = unit_dist();
    let w = PenaltyWeights::new(1.0, 21.7).unwrap();
    let cfg = SolverConfig {
        horizon_multiplier: 2.9,
        ..SolverConfig::default()
    };

    let r = solve(&d, &w, &cfg).unwrap();
    let t1 = r.t1_star;
    let n = r.schedule.len();
    assert!(
        (0.5815..=0.5830).contains(&t1),
        "t1_star = {t1}, allowed [0.5815, 0.5830]"
    );
    assert!(r.schedule.is_valid(), "schedule classification must be Valid");
    assert!(!r.degraded, "the pulled-in horizon must be reached exactly");
    assert!(n >= 15, "need at least 15 instants, got {n}");
    let t15 = r.schedule.instants()[14];
    assert_budget(start.elapsed(), Duration::from_secs(1), "a01 solve");
    println!(
        "a01: t1*={t1:.10} (allowed [0.5815, 0.5830]), n={n}, t_15={t15:.10} (allowed 2.8 +- 0.05)"
    );
    assert!(
        (2.75..=2.85).contains(&t15),
        "15th instant = {t15}, allowed 2.8 +- 0.05 \
         (every admissible 15-instant schedule here has t_15 near 2.93; see decision notes)"
    );
}

// ======================================================================
// a02. Point reduction against the optimal periodic policy
// ======================================================================

#[test]
fn a02_reduction_at_five_second_mean() {
    let start = Instant::now();
    let d = TteDistribution::from_mean(Family::Rayleigh, 5.0).unwrap();
    let w = PenaltyWeights::new(1.0, 21.7).unwrap();

    let r = solve(&d, &w, &SolverConfig::default()).unwrap();
    let p = optimal_period(&d, &w, &SearchRange::default_for(&d)).unwrap();
    let red = reduction_pct(r.breakdown.penalty, p.breakdown.penalty);

    println!(
        "a02: aperiodic={:.6}, optimal periodic={:.6} at T*={:.6}, reduction={red:.4}% (allowed 9.8 +- 1.5)",
        r.breakdown.penalty, p.breakdown.penalty, p.policy.period
    );
    assert!(
        (8.3..=11.3).contains(&red),
        "reduction = {red}%, allowed 9.8% +- 1.5pp"
    );
    assert_budget(start.elapsed(), Duration::from_secs(5), "a02");
}

// ======================================================================
// a03. Reduction trend across event-time means
// ======================================================================

#[test]
fn a03_reduction_trend_across_means() {
    let start = Instant::now();
    let w = PenaltyWeights::new(1.0, 21.7).unwrap();
    let baseline = PeriodicPolicy::new(0.0833).unwrap();

    let mut vs_periodic = Vec::new();
    let mut vs_baseline = Vec::new();
    for mu in 2..=10 {
        let d = TteDistribution::from_mean(Family::Rayleigh, mu as f64).unwrap();
        let r = solve(&d, &w, &SolverConfig::default()).unwrap();
        let p = optimal_period(&d, &w, &SearchRange::default_for(&d)).unwrap();
        let b = periodic_penalty_components(&d, &w, &baseline).unwrap();
        vs_periodic.push(reduction_pct(r.breakdown.penalty, p.breakdown.penalty));
        vs_baseline.push(reduction_pct(r.breakdown.penalty, b.penalty));
    }

    for (i, &red) in vs_periodic.iter().enumerate() {
        let mu = i + 2;
        if mu >= 3 {
            assert!(
                (8.0..=12.0).contains(&red),
                "reduction vs optimal periodic at mean {mu} s = {red}%, allowed [8%, 12%]"
            );
        }
    }
    for pair in vs_baseline.windows(2) {
        assert!(
            pair[1] > pair[0],
            "reduction vs 83.3 ms baseline must rise with the mean, got {pair:?}"
        );
    }
    println!(
        "a03: vs optimal periodic {:.3}%..{:.3}% over means 2..=10 (allowed [8,12] from 3 s), \
         vs baseline {:.3}% -> {:.3}% strictly increasing",
        vs_periodic.iter().cloned().fold(f64::INFINITY, f64::min),
        vs_periodic.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        vs_baseline.first().unwrap(),
        vs_baseline.last().unwrap()
    );
    assert_budget(start.elapsed(), Duration::from_secs(60), "a03");
}

// ======================================================================
// a04. Flat reduction surface over radio delay and power
// ======================================================================

#[test]
fn a04_reduction_surface_is_flat_over_radio_settings() {
    let start = Instant::now();
    let d = TteDistribution::from_mean(Family::Rayleigh, 4.84).unwrap();

    let mut reductions = Vec::with_capacity(25);
    for &tau_c in &linspace(0.001, 0.020, 5) {
        for &p_c in &linspace(0.5, 5.0, 5) {
            let w = DeviceProfile::new(tau_c, 0.001, p_c, 0.334).unwrap().weights();
            let r = solve(&d, &w, &SolverConfig::default()).unwrap();
            let p = optimal_period(&d, &w, &SearchRange::default_for(&d)).unwrap();
            reductions.push(reduction_pct(r.breakdown.penalty, p.breakdown.penalty));
        }
    }

    let min = reductions.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = reductions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = reductions.iter().sum::<f64>() / reductions.len() as f64;
    println!(
        "a04: 25-point surface min={min:.4}% max={max:.4}% spread={:.4}pp (allowed < 3pp), mean={mean:.4}% (near 10%)",
        max - min
    );
    assert!(
        max - min < 3.0,
        "reduction spread = {}pp over the 25-point grid, allowed < 3pp",
        max - min
    );
    assert!(
        (8.5..=11.5).contains(&mean),
        "surface mean = {mean}%, expected centered near 10%"
    );
    assert_budget(start.elapsed(), Duration::from_secs(120), "a04");
}

// ======================================================================
// a05. Monte Carlo agreement with the analytic penalty
// ======================================================================

#[test]
fn a05_million_cycle_simulation_matches_analytic_penalty() {
    let start = Instant::now();
    let device = glass_device();
    let d = TteDistribution::from_mean(Family::Rayleigh, 4.846).unwrap();
    let w = device.weights();

    let r = solve(&d, &w, &SolverConfig::default()).unwrap();
    let report = simulate(&d, &device, &r.schedule, 1_000_000, 0).unwrap();

    let analytic = r.breakdown.penalty;
    let err = (report.mean_penalty - analytic).abs();
    let rel = err / analytic;
    println!(
        "a05: analytic={analytic:.9}, simulated={:.9} +- {:.9} (99% CI), rel err={rel:.3e} (allowed < 5e-3)",
        report.mean_penalty, report.ci99_penalty
    );
    assert!(
        err <= report.ci99_penalty,
        "analytic penalty {analytic} outside the 99% CI {} +- {}",
        report.mean_penalty,
        report.ci99_penalty
    );
    assert!(rel < 0.005, "relative error = {rel}, allowed < 0.5%");
    assert_eq!(
        report.beyond_tail_count, 0,
        "no event should outlive the 1e-22 tail in a million cycles"
    );
    assert_budget(start.elapsed(), Duration::from_secs(30), "a05");
}

// ======================================================================
// a06. Stationarity residuals and local optimality of solver output
// ======================================================================

#[test]
fn a06_solver_output_is_stationary_and_locally_optimal() {
    let d = TteDistribution::from_mean(Family::Rayleigh, 4.846).unwrap();
    let w = glass_device().weights();
    let r = solve(&d, &w, &SolverConfig::default()).unwrap();
    let s = &r.schedule;
    let tail = s.tail_instant().unwrap();

    let mut max_residual = 0.0f64;
    for n in 1..s.len() {
        let res = stationarity_residual(&d, &w, s, n).unwrap().abs();
        max_residual = max_residual.max(res);
    }
    assert!(
        max_residual < 1e-9 * w.beta,
        "max |stationarity residual| = {max_residual:e}, allowed < 1e-9*beta = {:e}",
        1e-9 * w.beta
    );

    // Nudging any single instant by +-0.1 ms must not find a cheaper
    // schedule; tolerate only float noise in the repricing.
    let pen0 = r.breakdown.penalty;
    let mut worst_delta = f64::INFINITY;
    for idx in 0..s.len() {
        for delta in [-1e-4, 1e-4] {
            let mut bumped = s.instants().to_vec();
            bumped[idx] += delta;
            let pen = penalty_of_instants(&d, &w, &bumped, tail).unwrap().penalty;
            worst_delta = worst_delta.min(pen - pen0);
        }
    }
    println!(
        "a06: max |residual|={max_residual:.3e} (allowed < {:.3e}), worst 0.1 ms nudge changes penalty by {worst_delta:+.3e} (allowed > {:e})",
        1e-9 * w.beta,
        -1e-10 * pen0
    );
    assert!(
        worst_delta >= -1e-10 * pen0,
        "a 0.1 ms nudge lowered the penalty by {worst_delta:e}, beyond float noise"
    );
}

// ======================================================================
// a07. Ordering of schedules by their first instant
// ======================================================================

#[test]
fn a07_lower_first_instant_stays_lower_out_to_twelve_instants() {
    let d = unit_dist();
    let w = PenaltyWeights::new(1.0, 21.0).unwrap();

    // Draw window: chains from anywhere below 0.5925 reach the 12th
    // instant without the recursion exponent blowing up; certify the top
    // edge first so a libm shift cannot silently shrink the evidence.
    let (lo, span) = (0.585, 0.0075);
    let mut edge = (0.0, lo + span);
    for _ in 2..=12 {
        edge = (edge.1, next_instant(&d, &w, edge.0, edge.1).unwrap());
        assert!(edge.1.is_finite());
    }

    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let mut draw = || {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + span * u
    };

    for pair in 0..50 {
        let (x, y) = (draw(), draw());
        let (a, b) = if x < y { (x, y) } else { (y, x) };
        let (mut pa, mut ca) = (0.0, a);
        let (mut pb, mut cb) = (0.0, b);
        for n in 2..=12 {
            let na = next_instant(&d, &w, pa, ca).unwrap();
            let nb = next_instant(&d, &w, pb, cb).unwrap();
            assert!(
                na.is_finite() && nb.is_finite(),
                "pair {pair}: instant {n} left the finite range"
            );
            assert!(
                na <= nb,
                "pair {pair}: t1={a} vs t1'={b} crossed at instant {n}: {na} > {nb}"
            );
            (pa, ca) = (ca, na);
            (pb, cb) = (cb, nb);
        }
    }
    println!(
        "a07: 50 random pairs in [{lo}, {}], chains of 12 instants, 0 order violations",
        lo + span
    );
}

// ======================================================================
// a08. Truncation bound at two kinds of horizon
// ======================================================================

#[test]
fn a08_truncation_bound_certifies_both_horizons() {
    // Wearable-profile weights at the horizon where 0.2% of events remain.
    let d = unit_dist();
    let w = PenaltyWeights::new(0.0153621, 0.334).unwrap();
    let t_h = d.inverse_ccdf(0.002).unwrap();
    let bound = truncation_error_bound(&d, &w, t_h, 1e-22).unwrap();
    assert!(
        bound > 0.0 && bound <= 0.0037,
        "bound at the 0.2% horizon = {bound}, allowed <= 0.0037"
    );

    // Six-mean horizon across three parameterizations.
    let mut six_mean = Vec::new();
    for (mean, alpha, beta) in [(1.0, 1.0, 21.7), (4.846, 0.0153621, 0.334), (2.5, 0.3, 11.0)] {
        let d = TteDistribution::from_mean(Family::Rayleigh, mean).unwrap();
        let w = PenaltyWeights::new(alpha, beta).unwrap();
        let b = truncation_error_bound(&d, &w, 6.0 * mean, 1e-22).unwrap();
        let cap = 6.0 * (alpha + 2.0 * beta * mean) * 1e-13;
        assert!(
            b <= cap,
            "six-mean bound at (mean={mean}, alpha={alpha}, beta={beta}) = {b:e}, allowed <= {cap:e}"
        );
        six_mean.push(b);
    }
    println!(
        "a08: 0.2%-horizon bound={bound:.6} (allowed <= 0.0037); six-mean bounds {:.3e}, {:.3e}, {:.3e} all under their caps",
        six_mean[0], six_mean[1], six_mean[2]
    );
}

// ======================================================================
// a09. Exhaustive grid oracle for the three-sample problem
// ======================================================================

/// Fix the last sample at the 1e-22 tail and search every (t1, t2) pair
/// on a 0.1 ms lattice. The brute-force minimum must sit within one grid
/// cell of the pair the interval recursion produces.
#[test]
fn a09_grid_search_confirms_the_recursion_on_three_samples() {
    let start = Instant::now();
    let d = unit_dist();
    let w = PenaltyWeights::new(1.0, 21.7).unwrap();
    let t3 = d.inverse_ccdf(1e-22).unwrap();

    // Recursion-generated pair: choose t1 so the third step of the
    // recursion lands exactly on t3. The landing point grows with t1.
    let lands_at = |t1: f64| -> f64 {
        let t2 = next_instant(&d, &w, 0.0, t1).unwrap();
        next_instant(&d, &w, t1, t2).unwrap()
    };
    let (mut lo, mut hi) = (0.3, 1.4);
    assert!(lands_at(lo) < t3 && lands_at(hi) > t3, "bisection bracket must straddle t3");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lands_at(mid) < t3 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t1_rec = 0.5 * (lo + hi);
    let t2_rec = next_instant(&d, &w, 0.0, t1_rec).unwrap();
    let pen_rec = penalty_of_instants(&d, &w, &[t1_rec, t2_rec], t3)
        .unwrap()
        .penalty;
    // Reference values for this fixed point.
    assert!((t1_rec - 1.2191302140047005).abs() < 1e-6, "t1_rec = {t1_rec}");
    assert!((t2_rec - 2.3288511403793977).abs() < 1e-6, "t2_rec = {t2_rec}");
    assert!(
        (pen_rec - 15.322529623928935).abs() / 15.32 < 1e-9,
        "pen_rec = {pen_rec}"
    );

    // The penalty of [t1, t2] with fixed tail t3 splits into terms that
    // depend on one index each plus one product term:
    //   pen = C + A(t1) + beta*ccdf(t1)*t2 + B(t2)
    // which turns the 3.2e9-pair scan into two lookups and one multiply.
    let h = 1e-4;
    let k_max = ((t3 - h) / h).floor() as usize;
    let mut t = Vec::with_capacity(k_max);
    let mut cc = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let tk = k as f64 * h;
        t.push(tk);
        cc.push(d.ccdf(tk));
    }
    let cc3 = d.ccdf(t3);
    let pe3 = d.partial_expectation(0.0, t3).unwrap();
    let c0 = w.alpha * (1.0 - 3.0 * cc3) - w.beta * t3 * cc3 - w.beta * pe3;
    let a: Vec<f64> = (0..k_max)
        .map(|i| w.alpha * cc[i] + w.beta * t[i] * (1.0 - cc[i]))
        .collect();
    let b: Vec<f64> = (0..k_max)
        .map(|j| cc[j] * (w.alpha + w.beta * (t3 - t[j])))
        .collect();

    // The factored form must agree with the reference pricing before the
    // scan is allowed to rely on it.
    for (i, j) in (0..k_max).step_by(7919).flat_map(|i| {
        ((i + 1)..k_max)
            .step_by(9973)
            .map(move |j| (i, j))
    }) {
        let fast = c0 + a[i] + w.beta * cc[i] * t[j] + b[j];
        let slow = penalty_of_instants(&d, &w, &[t[i], t[j]], t3)
            .unwrap()
            .penalty;
        assert!(
            (fast - slow).abs() / slow < 1e-9,
            "factored penalty drifts at ({i}, {j}): {fast} vs {slow}"
        );
    }

    let mut best = (f64::INFINITY, 0usize, 0usize);
    for i in 0..k_max - 1 {
        let base = c0 + a[i];
        let slope = w.beta * cc[i];
        for (off, (tj, bj)) in t[i + 1..].iter().zip(&b[i + 1..]).enumerate() {
            let v = base + slope * tj + bj;
            if v < best.0 {
                best = (v, i, i + 1 + off);
            }
        }
    }
    let (pen_grid, i_star, j_star) = best;
    let (t1_grid, t2_grid) = (t[i_star], t[j_star]);
    let elapsed = start.elapsed();

    println!(
        "a09: grid minimum ({t1_grid:.4}, {t2_grid:.4}) pen={pen_grid:.9} vs recursion ({t1_rec:.9}, {t2_rec:.9}) pen={pen_rec:.9}; \
         offsets ({:+.2e}, {:+.2e}) within one 1e-4 cell; {elapsed:.2?}",
        t1_grid - t1_rec,
        t2_grid - t2_rec
    );
    assert!(
        (t1_grid - t1_rec).abs() <= h * 1.0000001,
        "grid t1 = {t1_grid}, recursion t1 = {t1_rec}: more than one cell apart"
    );
    assert!(
        (t2_grid - t2_rec).abs() <= h * 1.0000001,
        "grid t2 = {t2_grid}, recursion t2 = {t2_rec}: more than one cell apart"
    );
    assert!(
        pen_grid >= pen_rec - 1e-9 * pen_rec,
        "grid found a cheaper point than the stationary pair: {pen_grid} < {pen_rec}"
    );
    assert!(
        pen_grid - pen_rec <= 1e-4,
        "grid minimum {pen_grid} unexpectedly far above the stationary value {pen_rec}"
    );
    assert_budget(elapsed, Duration::from_secs(120), "a09 grid scan");
}

// ======================================================================
// a10. Byte-identical reruns
// ======================================================================

#[test]
fn a10_repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("glass.toml");
    std::fs::write(
        &scenario,
        "schema_version = 1\n\
         [distribution]\nfamily = \"rayleigh\"\nmean = 4.846\n\
         [device]\ntau_c = 0.00585\ntau_s = 0.001\np_c = 2.96\np_0 = 0.334\n",
    )
    .unwrap();

    let run = |args: &[&str], out: &std::path::Path| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_esamp"))
            .args(args)
            .arg("--scenario")
            .arg(&scenario)
            .arg("--out")
            .arg(out)
            .arg("--quiet")
            .status()
            .unwrap();
        assert!(status.success(), "command {args:?} failed");
        std::fs::read(out).unwrap()
    };

    for (name, args) in [
        ("solve json", vec!["solve"]),
        ("solve csv", vec!["solve", "--format", "csv"]),
        ("compare", vec!["compare"]),
        (
            "simulate",
            vec!["simulate", "--cycles", "2000", "--seed", "7"],
        ),
    ] {
        let first = run(&args, &dir.path().join("first.out"));
        let second = run(&args, &dir.path().join("second.out"));
        assert!(!first.is_empty());
        assert_eq!(first, second, "{name}: reruns must be byte-identical");
    }
    println!("a10: solve (json+csv), compare, and seeded simulate reruns are byte-identical");
}
