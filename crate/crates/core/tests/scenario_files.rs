//! Every shipped scenario and sweep document parses, validates and
//! survives a serialize/parse round trip.

use std::path::PathBuf;

use coexist::cli::SweepSpec;
use coexist::scenario::{parse_scenario, parse_scenario_file, serialize_scenario};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn files(sub: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir().join(sub))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

#[test]
fn scenarios_validate_and_round_trip() {
    let all = files("");
    assert!(all.len() >= 5);
    for p in all {
        let spec = parse_scenario_file(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let back = parse_scenario(&serialize_scenario(&spec)).unwrap();
        assert_eq!(spec, back, "{}", p.display());
        spec.validate().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn sweeps_point_at_valid_scenarios() {
    let all = files("sweeps");
    assert!(all.len() >= 4);
    for p in all {
        let sweep = SweepSpec::from_file(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let base = parse_scenario_file(&sweep.scenario).unwrap();
        for v in &sweep.values {
            let mut spec = base.clone();
            sweep.apply(&mut spec, v).unwrap();
            spec.validate().unwrap_or_else(|e| panic!("{} at {v}: {e}", p.display()));
        }
    }
}

#[test]
fn crosstalk_profile_spans_one_db() {
    let spec = parse_scenario_file(&dir().join("sdm_co.toml")).unwrap();
    let k = spec.coupling.kappa(1, 0).unwrap();
    let to_db_km = |v: f64| 10.0 * (v * 1e3).log10();
    let lo = to_db_km(k.eval(191.575e12));
    let hi = to_db_km(k.eval(195.925e12));
    assert!(lo > hi, "longer wavelengths couple more");
    assert!((lo - hi - 1.0).abs() < 0.02, "{lo} {hi}");
    let mid = to_db_km(k.eval(299_792_458.0 / 1547.5e-9));
    assert!((mid + 60.0).abs() < 0.01, "{mid}");
}
