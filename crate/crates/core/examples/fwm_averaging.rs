//! Accumulated FWM at the center of a fully loaded C-band with the exact
//! oscillating χ, its envelopes and the averaged χ̃.
//!
//!     cargo run --release --example fwm_averaging

use std::path::Path;

use coexist::fwm::{closed_form_fwm_power, ChiVariant};
use coexist::metrics::psd_mw_per_ghz;
use coexist::scenario::parse_scenario_file;

fn main() -> coexist::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/single_mode_cband.toml");
    let mut spec = parse_scenario_file(&path)?;
    spec.grid.quantum.channel = 44;
    spec.solver.include_srs = false;
    let scn = spec.validate()?;
    let b = scn.grid().spacing;
    let psd = |z: f64, v| psd_mw_per_ghz(closed_form_fwm_power(&scn, 0, 44, z, v), b);

    println!("FWM PSD at {:.3} THz, mW/GHz", scn.frequency(44) / 1e12);
    println!("{:>6} {:>11} {:>11} {:>11} {:>11}", "z_km", "min", "exact", "averaged", "max");
    for km in (0..=100).step_by(10) {
        let z = km as f64 * 1e3;
        println!(
            "{km:>6} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e}",
            psd(z, ChiVariant::Min)?,
            psd(z, ChiVariant::Exact)?,
            psd(z, ChiVariant::Average)?,
            psd(z, ChiVariant::Max)?
        );
    }
    let (e, a) = (
        closed_form_fwm_power(&scn, 0, 44, 100e3, ChiVariant::Exact),
        closed_form_fwm_power(&scn, 0, 44, 100e3, ChiVariant::Average),
    );
    println!("\naveraged vs exact at 100 km: {:+.4} dB", 10.0 * (a / e).log10());
    Ok(())
}
