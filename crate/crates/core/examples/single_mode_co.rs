//! Co-propagating quantum channel in a fully loaded single-mode C-band:
//! per-source PSD along the span, then the spectrum at 30 and 80 km.
//!
//!     cargo run --release --example single_mode_co

use std::path::Path;

use coexist::kinetics::solve;
use coexist::metrics::W_PER_HZ_TO_MW_PER_GHZ;
use coexist::scenario::{parse_scenario_file, Scenario};

fn at_km(scn: &Scenario, km: f64) -> coexist::Result<coexist::kinetics::Sources> {
    let res = solve(scn)?;
    let k = res.z_samples.iter().position(|z| (z / 1e3 - km).abs() < 1e-6).expect("sample on the km grid");
    Ok(res.quantum_trace(scn)[k])
}

fn main() -> coexist::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/single_mode_cband.toml");
    let spec = parse_scenario_file(&path)?;
    let scn = spec.clone().validate()?;
    let mw = W_PER_HZ_TO_MW_PER_GHZ / scn.grid().spacing;

    let res = solve(&scn)?;
    println!("quantum channel {} ({:.3} THz), PSD in mW/GHz", scn.quantum().channel, scn.frequency(87) / 1e12);
    println!("{:>6} {:>11} {:>11} {:>11}", "z_km", "sprs", "fwm", "total");
    for (z, s) in res.z_samples.iter().zip(res.quantum_trace(&scn)).step_by(10) {
        println!("{:>6.0} {:>11.4e} {:>11.4e} {:>11.4e}", z / 1e3, s.sprs * mw, s.fwm * mw, s.total() * mw);
    }

    println!("\n{:>4} {:>9} {:>12} {:>12} {:>12} {:>12}", "ch", "f_THz", "sprs@30", "fwm@30", "sprs@80", "fwm@80");
    for q in (0..88).step_by(8).chain([87]) {
        let mut s = spec.clone();
        s.grid.quantum.channel = q;
        let scn = s.validate()?;
        let (a, b) = (at_km(&scn, 30.0)?, at_km(&scn, 80.0)?);
        println!(
            "{q:>4} {:>9.3} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            scn.frequency(q) / 1e12,
            a.sprs * mw,
            a.fwm * mw,
            b.sprs * mw,
            b.fwm * mw
        );
    }
    Ok(())
}
