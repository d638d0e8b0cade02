//! A dedicated quantum mode group against the single-mode baseline, both
//! co-propagating with the same classical load.
//!
//!     cargo run --release --example sdm_co

use std::path::Path;

use coexist::kinetics::solve;
use coexist::metrics::W_PER_HZ_TO_MW_PER_GHZ;
use coexist::scenario::parse_scenario_file;

fn main() -> coexist::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let smf = parse_scenario_file(&dir.join("single_mode_cband.toml"))?.validate()?;
    let sdm = parse_scenario_file(&dir.join("sdm_co.toml"))?.validate()?;
    let mw = W_PER_HZ_TO_MW_PER_GHZ / smf.grid().spacing;
    let (a, b) = (solve(&smf)?, solve(&sdm)?);
    let (ta, tb) = (a.quantum_trace(&smf), b.quantum_trace(&sdm));
    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>10}", "z_km", "smf_total", "sdm_sprs", "sdm_fwm", "sdm_total", "gap_dB");
    for k in (0..a.z_samples.len()).step_by(10) {
        println!(
            "{:>6.0} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.2}",
            a.z_samples[k] / 1e3,
            ta[k].total() * mw,
            tb[k].sprs * mw,
            tb[k].fwm * mw,
            tb[k].total() * mw,
            10.0 * (ta[k].total() / tb[k].total()).log10()
        );
    }
    Ok(())
}
