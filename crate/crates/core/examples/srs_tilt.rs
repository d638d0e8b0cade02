//! Closed-form SRS tilt against the coupled Raman equations.
//!
//!     cargo run --release --example srs_tilt [launch_dBm]

use std::path::Path;

use coexist::kinetics::SolveOptions;
use coexist::oracle::srs_coupled_solve;
use coexist::scenario::{parse_scenario_file, LaunchPower};
use coexist::srs::{effective_loss, signal_profile};
use coexist::units::{dbm_to_watt, neper_per_m_to_db_per_km};

fn main() -> coexist::Result<()> {
    let dbm: f64 = std::env::args().nth(1).map_or(25.0, |s| s.parse().expect("launch power in dBm"));
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/single_mode_cband.toml");
    let mut spec = parse_scenario_file(&path)?;
    spec.launch.groups[0].power = LaunchPower::Total(dbm_to_watt(dbm));
    let scn = spec.validate()?;
    let tilt = &scn.tilt();
    println!(
        "{dbm} dBm: alpha0 = {:.4} dB/km, f_R = {:.3} THz",
        neper_per_m_to_db_per_km(tilt.alpha0[0]),
        tilt.terms[0][0].as_ref().map_or(f64::NAN, |t| t.f_r / 1e12)
    );
    let ode = srs_coupled_solve(&scn, 100_000, SolveOptions { max_samples: 11 })?;
    let last = ode.z.len() - 1;
    let l = scn.span_length();
    println!("{:>4} {:>9} {:>12} {:>12} {:>9} {:>14}", "ch", "f_THz", "closed_dBm", "ode_dBm", "diff_dB", "alpha~_dB/km");
    let mut worst: f64 = 0.0;
    for i in 0..scn.channels() {
        let p0 = scn.launch().p_tx[0][i];
        if p0 == 0.0 {
            continue;
        }
        let closed = signal_profile(&scn, 0, i, l);
        let exact = ode.power(last, i);
        let diff = 10.0 * (closed / exact).log10();
        worst = worst.max(diff.abs());
        if i % 8 == 0 || i + 1 == scn.channels() - 1 {
            println!(
                "{i:>4} {:>9.3} {:>12.4} {:>12.4} {:>9.4} {:>14.4}",
                scn.frequency(i) / 1e12,
                10.0 * (closed * 1e3).log10(),
                10.0 * (exact * 1e3).log10(),
                diff,
                neper_per_m_to_db_per_km(effective_loss(&scn, 0, i, l))
            );
        }
    }
    println!("largest closed-form deviation at {} km: {worst:.4} dB", l / 1e3);
    Ok(())
}
