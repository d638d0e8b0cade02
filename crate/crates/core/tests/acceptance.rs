//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Built with `harness = false`. The process fails when a criterion fails
//! that is not listed in `KNOWN_FAILURES`; known failures are still
//! printed as FAIL, with their measured numbers.

use std::path::PathBuf;
use std::time::Instant;

use coexist::cli::trajectory_csv;
use coexist::fwm::{chi_and_envelopes, closed_form_fwm_power, efficiency_exact, ChiVariant, Mismatch};
use coexist::kinetics::{solve, solve_with, SolveOptions};
use coexist::metrics::qber;
use coexist::oracle::{efficiency_numeric, srs_coupled_solve, srs_fwm_comparison, verify};
use coexist::profiles::{nonlinear_scaling_factor, raman_cross_section, RamanGainModel};
use coexist::scenario::{parse_scenario_file, FwmMode, LaunchPower, ScenarioSpec, TrackMode};
use coexist::srs::signal_profile;
use coexist::units::dbm_to_watt;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

/// Criteria that fail for reasons recorded in the README.
const KNOWN_FAILURES: &[u32] = &[6];

type Outcome = (bool, String);

fn scenario(name: &str) -> ScenarioSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    parse_scenario_file(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn db(a: f64, b: f64) -> f64 {
    10.0 * (a / b).log10()
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn c1_scaling_factor() -> Outcome {
    let r = nonlinear_scaling_factor(2, 0.18);
    ((r - 0.9089).abs() <= 0.005, format!("r(2, 0.18) = {r:.5}, target 0.9089 ± 0.005"))
}

fn c2_accuracy() -> Outcome {
    let scn = scenario("upper_cband_accuracy.toml").validate().unwrap();
    let t0 = Instant::now();
    solve(&scn).unwrap();
    let fast = t0.elapsed().as_secs_f64();
    let report = verify(&scn, 1_000_000).unwrap();
    let err = report.max_error_db("endpoint.total");
    let speedup = report.speedup();
    (
        err <= 0.25 && speedup >= 100.0 && fast < 1.0,
        format!(
            "endpoint error {err:.4} dB (≤ 0.25), speedup {speedup:.0}x (≥ 100), fast path {:.1} ms, reference {:.1} s",
            fast * 1e3,
            report.reference_time.as_secs_f64()
        ),
    )
}

fn c3_fwm_averaging() -> Outcome {
    let mut spec = scenario("single_mode_cband.toml");
    spec.grid.quantum.channel = 44;
    let scn = spec.validate().unwrap();
    let mut inside = true;
    for k in 0..=1000 {
        let z = 100.0 * k as f64;
        let p = |v| closed_form_fwm_power(&scn, 0, 44, z, v);
        let (lo, avg, hi) = (p(ChiVariant::Min), p(ChiVariant::Average), p(ChiVariant::Max));
        inside &= lo <= avg * (1.0 + 1e-12) && avg <= hi * (1.0 + 1e-12);
    }
    let d = db(
        closed_form_fwm_power(&scn, 0, 44, 100e3, ChiVariant::Average),
        closed_form_fwm_power(&scn, 0, 44, 100e3, ChiVariant::Exact),
    );
    (
        inside && d.abs() <= 0.1,
        format!("χ̃ inside envelopes on 1001 points: {inside}; averaged vs exact at 100 km {d:+.4} dB (≤ 0.1)"),
    )
}

fn c4_efficiency_closure() -> Outcome {
    let worst = std::cell::Cell::new(0.0f64);
    let strategy = (-1e-3f64..-1e-7, -1e-2f64..1e-2, 1.0f64..2e5);
    let result = runner(1000).run(&strategy, |(da, db, z)| {
        let exact = efficiency_exact(Mismatch { delta_alpha: da, delta_beta: db }, z);
        let num = efficiency_numeric(|_| da, db, z, 10_000).unwrap();
        let rel = (num - exact).abs() / exact.abs();
        worst.set(worst.get().max(rel));
        prop_assert!(rel <= 1e-9, "Δα {} Δβ {} z {}: {}", da, db, z, rel);
        Ok(())
    });
    (result.is_ok(), format!("1000 cases, worst relative gap {:.2e} (≤ 1e-9)", worst.get()))
}

fn c5_srs_closed_form() -> Outcome {
    let scn = scenario("single_mode_cband.toml").validate().unwrap();
    let t0 = Instant::now();
    let ode = srs_coupled_solve(&scn, 100_000, SolveOptions { max_samples: 2 }).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let last = ode.z.len() - 1;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..scn.channels() {
        if scn.launch().p_tx[0][i] > 0.0 {
            worst = worst.max(db(signal_profile(&scn, 0, i, 100e3), ode.power(last, i)).abs());
            count += 1;
        }
    }
    (
        worst <= 0.1 && secs < 60.0,
        format!("{count} loaded channels, worst {worst:.4} dB (≤ 0.1), oracle {secs:.1} s"),
    )
}

fn c6_fwm_under_srs() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for q in [0, 87] {
        let mut spec = scenario("single_mode_cband.toml");
        spec.grid.quantum.channel = q;
        spec.launch.groups[0].power = LaunchPower::Total(dbm_to_watt(30.0));
        let scn = spec.validate().unwrap();
        let c = srs_fwm_comparison(&scn, q, 100, 100_000).unwrap();
        let (a, n) = (c.averaged_db(), c.no_srs_db());
        ok &= a.abs() <= 1.0 && n.abs() > a.abs().max(1.0);
        parts.push(format!("ch {q}: SRS-aware {a:+.3} dB, no-SRS {n:+.3} dB"));
    }
    (ok, format!("{} (need |SRS-aware| ≤ 1 dB < |no-SRS|)", parts.join("; ")))
}

fn c7_sdm_isolation() -> Outcome {
    let smf = scenario("single_mode_cband.toml").validate().unwrap();
    let sdm = scenario("sdm_co.toml").validate().unwrap();
    let a = solve(&smf).unwrap().received(&smf).total();
    let b = solve(&sdm).unwrap().received(&sdm).total();
    let gap = db(a, b);
    ((gap - 40.0).abs() <= 5.0, format!("SDM {gap:.2} dB below single mode at 100 km (40 ± 5)"))
}

fn received_at(spec: &ScenarioSpec, km: f64) -> f64 {
    let mut s = spec.clone();
    s.solver.span_length = km * 1e3;
    let scn = s.validate().unwrap();
    solve_with(&scn, SolveOptions { max_samples: 2 }).unwrap().received(&scn).total()
}

fn c8_counter() -> Outcome {
    let co = scenario("sdm_co.toml");
    let counter = scenario("sdm_counter.toml");
    let no_notch = scenario("sdm_counter_no_notch.toml");
    let inc = received_at(&counter, 100.0) / received_at(&counter, 80.0) - 1.0;
    let notch_gap = db(received_at(&no_notch, 100.0), received_at(&counter, 100.0));
    // first span length (1 km grid) where counter-propagation is noisier
    let crossing = (1..=150)
        .map(f64::from)
        .find(|&km| received_at(&counter, km) >= received_at(&co, km));
    let cross_ok = crossing.is_some_and(|km| km > 80.0);
    (
        inc < 0.10 && (notch_gap - 30.0).abs() <= 5.0 && cross_ok,
        format!(
            "80→100 km increment {:+.2}% (< 10%), no-notch gap {notch_gap:.2} dB (30 ± 5), crossing at {} (> 80 km)",
            inc * 100.0,
            crossing.map_or("none".into(), |k| format!("{k} km"))
        ),
    )
}

fn c9_properties() -> Outcome {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };

    let env = runner(500).run(&(-1e-3f64..0.0, -1e-2f64..1e-2, 0.0f64..2e5), |(da, db, z)| {
        let c = chi_and_envelopes(Mismatch { delta_alpha: da, delta_beta: db }, z);
        let tol = 1e-12 * c.max;
        prop_assert!(c.min <= c.exact + tol && c.exact <= c.max + tol);
        prop_assert!(c.min <= c.avg + tol && c.avg <= c.max + tol);
        Ok(())
    });
    check("envelope sandwich", env.is_ok());

    // FWM only: no Raman gain, no tilt
    let mut base = scenario("upper_cband_accuracy.toml");
    base.solver.include_srs = false;
    base.mode_groups[0].raman_gain = RamanGainModel::ClippedLinear { slope: 0.0, peak: 0.0 };
    let scaled = |spec: &ScenarioSpec, s: f64| {
        let mut spec = spec.clone();
        for g in &mut spec.launch.groups {
            if let LaunchPower::Total(p) = &mut g.power {
                *p *= s;
            }
        }
        let scn = spec.validate().unwrap();
        solve(&scn).unwrap().quantum_trace(&scn).iter().map(|x| x.total()).collect::<Vec<f64>>()
    };
    let one = scaled(&base, 1.0);
    let cubic = runner(8).run(&(0.1f64..10.0), |s| {
        for (a, b) in one.iter().zip(scaled(&base, s)) {
            prop_assert!((b - s * s * s * a).abs() <= 1e-9 * b.abs().max(1e-300));
        }
        Ok(())
    });
    check("cubic FWM scaling", cubic.is_ok());

    // SpRS and crosstalk only
    let mut lin = scenario("sdm_co.toml");
    lin.solver.include_srs = false;
    for g in &mut lin.mode_groups {
        g.gamma = 0.0;
    }
    let one = scaled(&lin, 1.0);
    let linear = runner(8).run(&(0.1f64..10.0), |s| {
        for (a, b) in one.iter().zip(scaled(&lin, s)) {
            prop_assert!((b - s * a).abs() <= 1e-9 * b.abs().max(1e-300));
        }
        Ok(())
    });
    check("linear SpRS/crosstalk scaling", linear.is_ok());

    let q = runner(500).run(&(0.0f64..1e9, 0.0f64..1e-9, 1.01f64..10.0), |(n, p, k)| {
        let f = 193e12;
        let base = qber(n, p, f).unwrap();
        prop_assert!((0.0..1.0).contains(&base) || (n == 0.0 && base == 1.0));
        prop_assert!(qber(n, p * k + 1e-30, f).unwrap() >= base);
        prop_assert!(qber(n * k + 1.0, p, f).unwrap() <= base);
        Ok(())
    });
    check("QBER monotone and bounded", q.is_ok());

    let model = RamanGainModel::ClippedLinear { slope: 0.0286e-15, peak: 0.4e-3 };
    let eta = runner(200).run(&(0.1e12f64..13e12), |df| {
        let f = 193e12;
        let stokes = raman_cross_section(f - df, f, 300.0, 50e9, &model).unwrap();
        let anti = raman_cross_section(f + df, f, 300.0, 50e9, &model).unwrap();
        prop_assert!(stokes > anti);
        Ok(())
    });
    check("Stokes/anti-Stokes asymmetry", eta.is_ok());

    let scn = scenario("sdm_counter.toml").validate().unwrap();
    let (a, b) = (solve(&scn).unwrap(), solve(&scn).unwrap());
    check("determinism", a == b && trajectory_csv(&scn, &a).unwrap() == trajectory_csv(&scn, &b).unwrap());

    let mut sums = true;
    for (name, full) in [("sdm_counter.toml", false), ("single_mode_cband.toml", true)] {
        let mut spec = scenario(name);
        if full {
            spec.solver.track_mode = TrackMode::FullGrid;
            spec.solver.fwm_mode = FwmMode::Averaged;
        }
        let scn = spec.validate().unwrap();
        let csv = trajectory_csv(&scn, &solve(&scn).unwrap()).unwrap();
        for rec in csv::Reader::from_reader(&csv[..]).records() {
            let rec = rec.unwrap();
            let v: Vec<f64> = (6..11).map(|k| rec[k].parse().unwrap()).collect();
            sums &= (v[1] + v[2] + v[3] + v[4] - v[0]).abs() <= 1e-9 * v[0].abs();
        }
    }
    check("source-breakdown summation", sums);

    (
        failed.is_empty(),
        if failed.is_empty() {
            "all 7 property suites hold".into()
        } else {
            format!("failing: {}", failed.join(", "))
        },
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "scaling factor", c1_scaling_factor),
        (2, "accuracy assessment", c2_accuracy),
        (3, "FWM averaging", c3_fwm_averaging),
        (4, "efficiency closure", c4_efficiency_closure),
        (5, "SRS closed form", c5_srs_closed_form),
        (6, "FWM under SRS", c6_fwm_under_srs),
        (7, "SDM isolation", c7_sdm_isolation),
        (8, "counter-propagation", c8_counter),
        (9, "property suites", c9_properties),
    ];
    let mut unexpected = Vec::new();
    for (n, name, f) in criteria {
        let (ok, detail) = f();
        let known = KNOWN_FAILURES.contains(&n);
        let tag = match (ok, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {n} ({name}): {tag}: {detail}");
        if !ok && !known {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
