//! Acceptance suite: one test per criterion, each printing a PASS line
//! (or failing with a diagnostic table). Run with
//! `cargo test -p cachemodes-cli --test acceptance -- --test-threads=1 --nocapture`.

mod brute;

use cachemodes_core::deterministic;
use cachemodes_core::dist::{popularity, CachingDist, NetworkConfig, PopularityDist};
use cachemodes_core::experiments::{
    evaluate, float_grid, optimize_gamma_c, preset, run_sweep, EngineChoice, EvalOptions,
    PRESET_NAMES,
};
use cachemodes_core::metrics::{aggregate_metrics, binomial_pmf, mode_pmf};
use cachemodes_core::modes::{Aggregate, Mode, ModeStat};
use cachemodes_core::simulator::{empirical_pmf, run_trials, split_std_errors};
use cachemodes_core::stochastic::{
    demand_probability, miss_probability, mode_probabilities_exact, mode_probabilities_fast,
    permutation_count, rest_cache_probability, PermutationIndex,
};
use cachemodes_core::Policy;
use cachemodes_cli::records::{write_records, Cell, OutputFormat, ResultRecord, MODES_SCHEMA};

fn dists(m: usize, gamma_r: f64, gamma_c: f64) -> (PopularityDist, CachingDist) {
    (
        PopularityDist::new(m, gamma_r).unwrap(),
        CachingDist::new(m, gamma_c).unwrap(),
    )
}

/// Criterion 1: for every engine and every grid point of the built-in
/// presets, the six mode probabilities sum to 1 within 1e-9.
#[test]
fn criterion_01_partition_of_unity() {
    let mut points = 0usize;
    for name in PRESET_NAMES {
        for spec in preset(name).unwrap() {
            let result = run_sweep(&spec).unwrap();
            for row in &result.rows {
                let point = row
                    .outcome
                    .as_ref()
                    .unwrap_or_else(|e| panic!("{name} row {} failed: {e}", row.value));
                let sum = point.modes.sum();
                assert!(
                    (sum - 1.0).abs() < 1e-9,
                    "{name} value {}: sum {sum}",
                    row.value
                );
                point.modes.validate().unwrap();
                points += 1;
            }
        }
    }
    println!("criterion 1 (partition of unity): PASS ({points} preset grid points)");
}

/// Criterion 2: the exact enumeration engine equals the fast product
/// form within 1e-10 per mode for every (m, N) with m^N <= 1e6 on the
/// tested radix range, across gamma_r in {0, 0.8, 2.5} x gamma_c in
/// {0, 1.6}.
#[test]
fn criterion_02_engine_equivalence() {
    let mut cases = 0usize;
    let mut worst: f64 = 0.0;
    for m in [1usize, 2, 3, 4, 5, 6, 7, 8, 10, 16] {
        for n in 1..=20usize {
            match permutation_count(m, n) {
                Some(total) if total <= 1_000_000 => {}
                _ => break,
            }
            for gamma_r in [0.0, 0.8, 2.5] {
                for gamma_c in [0.0, 1.6] {
                    let (pop, cache) = dists(m, gamma_r, gamma_c);
                    let exact = mode_probabilities_exact(&pop, &cache, n).unwrap();
                    let fast = mode_probabilities_fast(&pop, &cache, n).unwrap();
                    for (a, b) in exact.as_array().iter().zip(fast.as_array()) {
                        let delta = (a - b).abs();
                        worst = worst.max(delta);
                        assert!(
                            delta < 1e-10,
                            "m={m} n={n} gamma_r={gamma_r} gamma_c={gamma_c}: {a} vs {b}"
                        );
                    }
                    exact.validate().unwrap();
                    fast.validate().unwrap();
                    cases += 1;
                }
            }
        }
    }
    println!(
        "criterion 2 (exact vs fast equivalence): PASS ({cases} cases, worst delta {worst:.2e})"
    );
}

/// Criterion 3: at (m=4, N=3) the exact engine matches a brute-force
/// joint enumeration to 1e-14, and the block-table event probabilities
/// are reproduced row by row.
#[test]
fn criterion_03_small_case_golden() {
    let (pop, cache) = dists(4, 0.8, 1.6);
    let exact = mode_probabilities_exact(&pop, &cache, 3).unwrap();
    let oracle = brute::enumerate_modes(&pop, &cache, 3);
    let delta_hdtx = (exact.p_hdtx - oracle.p_hdtx).abs();
    assert!(delta_hdtx < 1e-14, "HDTX {} vs {}", exact.p_hdtx, oracle.p_hdtx);
    for (mode, (a, b)) in Mode::ALL
        .into_iter()
        .zip(exact.as_array().into_iter().zip(oracle.as_array()))
    {
        assert!(delta(a, b) < 1e-14, "{mode}: {a} vs {b}");
    }

    // Event-probability columns for the first four rows of each block.
    let rho = |k: usize| pop.mass(k);
    let mu = |k: usize| cache.mass(k);
    #[rustfmt::skip]
    let golden: &[(u64, [usize; 3], f64, f64)] = &[
        (1,  [1, 1, 1], rho(2) + rho(3) + rho(4), mu(1) * mu(1)),
        (2,  [1, 1, 2], rho(3) + rho(4),          mu(1) * mu(2)),
        (3,  [1, 1, 3], rho(2) + rho(4),          mu(1) * mu(3)),
        (4,  [1, 1, 4], rho(2) + rho(3),          mu(1) * mu(4)),
        (17, [2, 1, 1], rho(3) + rho(4),          mu(1) * mu(1)),
        (18, [2, 1, 2], rho(3) + rho(4),          mu(1) * mu(2)),
        (19, [2, 1, 3], rho(4),                   mu(1) * mu(3)),
        (20, [2, 1, 4], rho(3),                   mu(1) * mu(4)),
        (33, [3, 1, 1], rho(2) + rho(4),          mu(1) * mu(1)),
        (34, [3, 1, 2], rho(4),                   mu(1) * mu(2)),
        (35, [3, 1, 3], rho(2) + rho(4),          mu(1) * mu(3)),
        (36, [3, 1, 4], rho(2),                   mu(1) * mu(4)),
        (49, [4, 1, 1], rho(2) + rho(3),          mu(1) * mu(1)),
        (50, [4, 1, 2], rho(3),                   mu(1) * mu(2)),
        (51, [4, 1, 3], rho(2),                   mu(1) * mu(3)),
        (52, [4, 1, 4], rho(2) + rho(3),          mu(1) * mu(4)),
    ];
    for &(row, contents, w_expected, y_expected) in golden {
        let index = PermutationIndex::new(row, 4, 3).unwrap();
        let decoded = index.decode();
        assert_eq!(decoded, contents, "row {row}");
        assert!(delta(miss_probability(&decoded, &pop), w_expected) < 1e-15, "row {row} W");
        assert!(delta(cache.mass(decoded[0]), mu(decoded[0])) < 1e-15, "row {row} X");
        assert!(
            delta(rest_cache_probability(&decoded, &cache), y_expected) < 1e-15,
            "row {row} Y"
        );
        let z_expected = 1.0 - (1.0 - rho(decoded[0])).powi(2);
        assert!(
            delta(demand_probability(decoded[0], &pop, 3), z_expected) < 1e-15,
            "row {row} Z"
        );
    }
    println!(
        "criterion 3 (small-case golden): PASS (HDTX delta {delta_hdtx:.2e}, 16 table rows)"
    );
}

fn delta(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

/// Criterion 4: deterministic closed forms, including the BFD/TNFD
/// split, match one million seeded trials within three standard errors
/// at m=500, gamma_r=0.8, N in {10, 50, 200}.
#[test]
fn criterion_04_closed_form_vs_simulation() {
    // Independent check first: at enumerable sizes the closed forms and
    // their split match a request-space brute force exactly.
    for (m, n) in [(5usize, 1usize), (5, 3), (5, 5), (8, 4)] {
        let pop = PopularityDist::new(m, 0.8).unwrap();
        let closed = deterministic::mode_probabilities(&pop, n).unwrap();
        let oracle = brute::enumerate_modes_deterministic(&pop, n);
        for (mode, (a, b)) in Mode::ALL
            .into_iter()
            .zip(closed.as_array().into_iter().zip(oracle.as_array()))
        {
            assert!(delta(a, b) < 1e-14, "m={m} n={n} {mode}: {a} vs {b}");
        }
        let (cs, os) = (closed.split.unwrap(), oracle.split.unwrap());
        assert!(delta(cs.p_bfd, os.p_bfd) < 1e-14, "m={m} n={n} BFD");
        assert!(delta(cs.p_tnfd, os.p_tnfd) < 1e-14, "m={m} n={n} TNFD");
    }

    let mut worst_ratio: f64 = 0.0;
    for n in [10usize, 50, 200] {
        let config = NetworkConfig::new(Policy::Deterministic, n, 500, 0.8, 0.0).unwrap();
        let estimate = run_trials(&config, 1_000_000, 42).unwrap();
        let closed = deterministic::mode_probabilities(&popularity(&config).unwrap(), n).unwrap();
        for (i, mode) in Mode::ALL.into_iter().enumerate() {
            let diff = delta(closed.get(mode), estimate.mode_probs.get(mode));
            let bound = 3.0 * estimate.std_errors[i];
            if estimate.std_errors[i] > 0.0 {
                worst_ratio = worst_ratio.max(diff / estimate.std_errors[i]);
            }
            assert!(
                diff <= bound || diff == 0.0,
                "N={n} {mode}: delta {diff:.3e} exceeds 3 sigma {bound:.3e}"
            );
        }
        let split = closed.split.unwrap();
        let mc_split = estimate.mode_probs.split.unwrap();
        let (se_bfd, se_tnfd) = split_std_errors(&estimate).unwrap();
        for (name, a, b, se) in [
            ("BFD", split.p_bfd, mc_split.p_bfd, se_bfd),
            ("TNFD", split.p_tnfd, mc_split.p_tnfd, se_tnfd),
        ] {
            let diff = delta(a, b);
            assert!(
                diff <= 3.0 * se || diff == 0.0,
                "N={n} {name}: delta {diff:.3e} exceeds 3 sigma {:.3e}",
                3.0 * se
            );
            if se > 0.0 {
                worst_ratio = worst_ratio.max(diff / se);
            }
        }
    }
    println!(
        "criterion 4 (closed form vs simulation, 1e6 trials, seed 42): PASS \
         (worst deviation {worst_ratio:.2} sigma)"
    );
}

/// Criterion 5: deterministic shape properties at m=500, gamma_r=0.8 —
/// (a) SR, SR-HDTX, HO below 0.01 at N=500; (b) the N maximizing FDTR
/// and HDTX below 50; (c) HDRX the largest mode at N=500.
#[test]
fn criterion_05_deterministic_shape() {
    let pop = PopularityDist::new(500, 0.8).unwrap();
    let at500 = deterministic::mode_probabilities(&pop, 500).unwrap();
    assert!(at500.p_sr < 0.01, "SR at N=500: {}", at500.p_sr);
    assert!(at500.p_sr_hdtx < 0.01, "SR-HDTX at N=500: {}", at500.p_sr_hdtx);
    assert!(at500.p_ho < 0.01, "HO at N=500: {}", at500.p_ho);
    for mode in [Mode::Sr, Mode::SrHdtx, Mode::Fdtr, Mode::Hdtx, Mode::Ho] {
        assert!(
            at500.p_hdrx > at500.get(mode),
            "HDRX ({}) not above {mode} ({})",
            at500.p_hdrx,
            at500.get(mode)
        );
    }

    let mut argmax_fdtr = (0usize, 0.0f64);
    let mut argmax_hdtx = (0usize, 0.0f64);
    for n in 2..=500usize {
        let probs = deterministic::mode_probabilities(&pop, n).unwrap();
        if probs.p_fdtr > argmax_fdtr.1 {
            argmax_fdtr = (n, probs.p_fdtr);
        }
        if probs.p_hdtx > argmax_hdtx.1 {
            argmax_hdtx = (n, probs.p_hdtx);
        }
    }
    println!(
        "criterion 5 diagnostics: FDTR max {:.4} at N={}, HDTX max {:.4} at N={}",
        argmax_fdtr.1, argmax_fdtr.0, argmax_hdtx.1, argmax_hdtx.0
    );
    assert!(
        argmax_hdtx.0 < 50,
        "HDTX peaks at N={}, expected below 50",
        argmax_hdtx.0
    );
    // Does not hold for the closed forms: FDTR grows monotonically in N
    // (0.003 at N=2 up to 0.451 at N=500, no interior peak), which the
    // seeded simulation confirms to three sigma. Kept as stated.
    assert!(
        argmax_fdtr.0 < 50,
        "FDTR peaks at N={}, expected below 50; the FDTR curve is \
         non-decreasing over the whole range 2..=500",
        argmax_fdtr.0
    );
    println!("criterion 5 (deterministic shape): PASS");
}

/// Criterion 6: stochastic at m=500, gamma_r=0.8, gamma_c=1.6 — FDTR
/// non-decreasing over N in {10..300}, and the stochastic HO probability
/// above the deterministic one at the same N.
#[test]
fn criterion_06_stochastic_shape() {
    let (pop, cache) = dists(500, 0.8, 1.6);
    let grid = [10usize, 50, 100, 200, 300];
    let mut rows = Vec::new();
    let mut last_fdtr = -1.0f64;
    for &n in &grid {
        let sto = mode_probabilities_fast(&pop, &cache, n).unwrap();
        let det = deterministic::mode_probabilities(&pop, n).unwrap();
        assert!(
            sto.p_fdtr >= last_fdtr,
            "FDTR decreased at N={n}: {} after {last_fdtr}",
            sto.p_fdtr
        );
        last_fdtr = sto.p_fdtr;
        rows.push((n, sto.p_ho, det.p_ho));
    }
    println!("criterion 6 diagnostics (HO stochastic vs deterministic):");
    for &(n, sto_ho, det_ho) in &rows {
        println!("  N={n}: stochastic {sto_ho:.5}, deterministic {det_ho:.5}");
    }
    println!("criterion 6 (FDTR non-decreasing): PASS");
    // Does not hold at these parameters: with the caching skew at 1.6
    // nearly every cached content is in demand, so stochastic HO falls
    // below deterministic HO for every N >= 9 (the direction only holds
    // for N <= 8 here, or for small libraries such as m=7). Kept as
    // stated.
    for &(n, sto_ho, det_ho) in &rows {
        assert!(
            sto_ho > det_ho,
            "HO at N={n}: stochastic {sto_ho:.5} is not above deterministic {det_ho:.5}"
        );
    }
    println!("criterion 6 (stochastic HO above deterministic): PASS");
}

/// Criterion 7: HD stays above FD for both policies along the gamma_r
/// axis (gamma_c=1.6) and the gamma_c axis (gamma_r=2.5) at N=100,
/// m=10^4, using the O(m) engine.
#[test]
fn criterion_07_hd_above_fd() {
    let options = EvalOptions::default();
    let mut worst = (f64::INFINITY, String::new());
    let mut check = |label: String, hd: f64, fd: f64| {
        if hd - fd < worst.0 {
            worst = (hd - fd, label);
        }
    };
    for gamma_r in float_grid(0.0, 0.25, 13) {
        let det = NetworkConfig::new(Policy::Deterministic, 100, 10_000, gamma_r, 0.0).unwrap();
        let point = evaluate(&det, EngineChoice::ClosedForm, &options).unwrap();
        check(
            format!("deterministic gamma_r={gamma_r}"),
            point.aggregates.p_hd,
            point.aggregates.p_fd,
        );
        let sto = NetworkConfig::new(Policy::Stochastic, 100, 10_000, gamma_r, 1.6).unwrap();
        let point = evaluate(&sto, EngineChoice::Fast, &options).unwrap();
        check(
            format!("stochastic gamma_r={gamma_r}"),
            point.aggregates.p_hd,
            point.aggregates.p_fd,
        );
    }
    for gamma_c in float_grid(0.0, 0.25, 17) {
        let sto = NetworkConfig::new(Policy::Stochastic, 100, 10_000, 2.5, gamma_c).unwrap();
        let point = evaluate(&sto, EngineChoice::Fast, &options).unwrap();
        check(
            format!("stochastic gamma_c={gamma_c}"),
            point.aggregates.p_hd,
            point.aggregates.p_fd,
        );
    }
    let det = NetworkConfig::new(Policy::Deterministic, 100, 10_000, 2.5, 0.0).unwrap();
    let point = evaluate(&det, EngineChoice::ClosedForm, &options).unwrap();
    check(
        "deterministic gamma_r=2.5 (gamma_c axis)".into(),
        point.aggregates.p_hd,
        point.aggregates.p_fd,
    );
    println!(
        "criterion 7 diagnostics: smallest HD-FD gap {:.5} at {}",
        worst.0, worst.1
    );
    // Does not hold on a narrow stretch of the stochastic gamma_r curve:
    // FD edges past HD by up to 0.0085 for gamma_r in roughly
    // (1.55, 1.8) at gamma_c=1.6 (confirmed by Monte Carlo at 38 sigma);
    // everywhere else the gap is positive. Kept as stated.
    assert!(
        worst.0 > 0.0,
        "HD fell below FD: gap {:.5} at {}",
        worst.0,
        worst.1
    );
    println!("criterion 7 (HD above FD on both axes): PASS");
}

/// Criterion 8: the gamma_c grid search at N=100, m=10^4, gamma_r=2.5,
/// step 0.1 maximizes HD and RX near 0.8, FD near 1.8, and finds no
/// interior optimum for TX.
#[test]
fn criterion_08_gamma_c_optima() {
    let base = NetworkConfig::new(Policy::Stochastic, 100, 10_000, 2.5, 0.0).unwrap();
    let grid = float_grid(0.0, 0.1, 41);
    let options = EvalOptions::default();
    let mut summary = Vec::new();
    for (metric, lo, hi) in [
        (Aggregate::Hd, 0.6, 1.0),
        (Aggregate::Rx, 0.6, 1.0),
        (Aggregate::Fd, 1.6, 2.0),
    ] {
        let result = optimize_gamma_c(metric, &grid, &base, EngineChoice::Fast, &options).unwrap();
        assert!(
            result.gamma_c_star >= lo && result.gamma_c_star <= hi,
            "{metric}: optimum {} outside [{lo}, {hi}]",
            result.gamma_c_star
        );
        assert!(!result.at_boundary, "{metric}: unexpected boundary optimum");
        summary.push(format!("{metric}*={:.1}", result.gamma_c_star));
    }
    let tx = optimize_gamma_c(Aggregate::Tx, &grid, &base, EngineChoice::Fast, &options).unwrap();
    assert!(
        tx.at_boundary,
        "TX: expected a boundary flag, got optimum {} inside the grid",
        tx.gamma_c_star
    );
    summary.push(format!("TX boundary at {:.1}", tx.gamma_c_star));
    println!("criterion 8 (gamma_c optima): PASS ({})", summary.join(", "));
}

/// Criterion 9: binomial PMF identities up to N=1000; empirical node
/// counts at m=500, N=50, gamma_r=0.8, gamma_c=1.6 compared to the
/// binomial PMFs in total variation with excess divergence reported; the
/// expected HD node count exceeds the FD one.
#[test]
fn criterion_09_pmfs() {
    for n in [1u64, 2, 10, 59, 60, 61, 100, 500, 1000] {
        for p in [0.0, 0.02, 0.3, 0.5, 0.8, 0.97, 1.0] {
            let sum: f64 = (0..=n).map(|k| binomial_pmf(n, k, p).unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-12, "n={n} p={p}: sum {sum}");
            let pmf = mode_pmf(n, p).unwrap();
            assert!((pmf.mean() - n as f64 * p).abs() < 1e-9, "n={n} p={p} mean");
            assert!(
                (pmf.variance() - n as f64 * p * (1.0 - p)).abs() < 1e-9,
                "n={n} p={p} variance"
            );
        }
    }

    // Sanity ceiling for the divergence report; the real check is the
    // printed table.
    const TV_REPORT_BOUND: f64 = 0.01;
    const TV_HARD_CEILING: f64 = 0.25;
    let mut excess = 0usize;
    println!("criterion 9 diagnostics (total variation, binomial vs 1e6 simulated trials):");
    for policy in [Policy::Deterministic, Policy::Stochastic] {
        let config = NetworkConfig::new(policy, 50, 500, 0.8, 1.6).unwrap();
        let estimate = run_trials(&config, 1_000_000, 42).unwrap();
        let engine = match policy {
            Policy::Deterministic => EngineChoice::ClosedForm,
            Policy::Stochastic => EngineChoice::Fast,
        };
        let point = evaluate(&config, engine, &EvalOptions::default()).unwrap();
        for mode in Mode::ALL {
            let p = point.modes.get(mode);
            let analytic = mode_pmf(50, p).unwrap();
            let empirical = empirical_pmf(&estimate, ModeStat::Mode(mode)).unwrap();
            let tv = analytic.tv_distance(&empirical);
            let flag = if tv > TV_REPORT_BOUND {
                excess += 1;
                " (EXCESS: per-trial node modes are mutually dependent and per-user \
                 probabilities are heterogeneous, so counts are narrower than binomial)"
            } else {
                ""
            };
            println!("  {policy} {mode}: p={p:.5} tv={tv:.4}{flag}");
            assert!(
                tv < TV_HARD_CEILING,
                "{policy} {mode}: tv {tv} beyond the sanity ceiling"
            );
            // The first moment agrees even where the shape diverges.
            assert!(
                (empirical.mean() - 50.0 * estimate.mode_probs.get(mode)).abs() < 1e-9,
                "{policy} {mode}: histogram mean inconsistent with the rate estimate"
            );
        }
        let aggregates = aggregate_metrics(&point.modes);
        let hd = empirical_pmf(&estimate, ModeStat::Aggregate(Aggregate::Hd)).unwrap();
        let fd = empirical_pmf(&estimate, ModeStat::Aggregate(Aggregate::Fd)).unwrap();
        println!(
            "  {policy} HD mean {:.3} (analytic {:.3}), FD mean {:.3} (analytic {:.3})",
            hd.mean(),
            50.0 * aggregates.p_hd,
            fd.mean(),
            50.0 * aggregates.p_fd
        );
        assert!(
            hd.mean() > fd.mean(),
            "{policy}: expected more HD nodes ({}) than FD nodes ({})",
            hd.mean(),
            fd.mean()
        );
    }
    println!(
        "criterion 9 (PMF identities, divergence report, HD vs FD counts): PASS \
         ({excess} of 12 mode PMFs exceed tv {TV_REPORT_BOUND} and are reported above)"
    );
}

/// Criterion 10: identical configuration, trials, and seed yield
/// bit-identical estimates across runs and worker counts, and
/// byte-identical CSV output.
#[test]
fn criterion_10_determinism() {
    let config = NetworkConfig::new(Policy::Stochastic, 8, 20, 0.8, 1.6).unwrap();
    let reference = run_trials(&config, 50_000, 42).unwrap();
    let rerun = run_trials(&config, 50_000, 42).unwrap();
    assert_eq!(reference, rerun, "repeated run differed");
    for threads in [1usize, 2, 4, 7] {
        let pooled = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_trials(&config, 50_000, 42).unwrap());
        assert_eq!(reference, pooled, "{threads}-thread run differed");
    }

    let csv_of = |estimate: &cachemodes_core::simulator::SimEstimate| {
        let mut record = ResultRecord::new(MODES_SCHEMA);
        record.set("policy", Cell::Text(config.policy().to_string()));
        record.set("trials", Cell::Int(estimate.trials));
        record.set("seed", Cell::Int(estimate.seed));
        for (mode, key) in Mode::ALL.into_iter().zip([
            "p_sr",
            "p_sr_hdtx",
            "p_fdtr",
            "p_hdtx",
            "p_hdrx",
            "p_ho",
        ]) {
            record.set(key, Cell::Float(estimate.mode_probs.get(mode)));
        }
        let mut buf = Vec::new();
        write_records(std::slice::from_ref(&record), OutputFormat::Csv, &mut buf).unwrap();
        buf
    };
    assert_eq!(csv_of(&reference), csv_of(&rerun), "CSV bytes differed");
    println!(
        "criterion 10 (determinism across runs and worker counts): PASS \
         (byte-identical CSV, thread counts 1/2/4/7)"
    );
}
