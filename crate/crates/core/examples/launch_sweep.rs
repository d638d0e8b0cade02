//! Receiver interference versus total launch power with log-log slopes of
//! the SpRS and FWM parts, at both band edges.
//!
//!     cargo run --release --example launch_sweep

use std::path::Path;

use coexist::cli::{run_sweep, SweepAxis, SweepSpec, SweepValue};
use coexist::scenario::parse_scenario_file;

fn main() -> coexist::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/single_mode_cband.toml");
    let dbm: Vec<f64> = (0..=30).step_by(2).map(f64::from).collect();
    let sweep = SweepSpec {
        axis: SweepAxis::TotalLaunchDbm,
        values: dbm.iter().copied().map(SweepValue::Number).collect(),
        scenario: path.clone(),
    };
    for q in [0, 87] {
        let mut base = parse_scenario_file(&path)?;
        base.grid.quantum.channel = q;
        let rows = run_sweep(&sweep, &base)?;
        println!("quantum channel {q}");
        println!("{:>5} {:>12} {:>12}", "dBm", "sprs_W", "fwm_W");
        for (p, r) in dbm.iter().zip(&rows) {
            println!("{p:>5} {:>12.4e} {:>12.4e}", r.received.sprs, r.received.fwm);
        }
        // slopes between 4 and 16 dBm, dB per dB
        let (lo, hi) = (2, 8);
        let slope = |f: &dyn Fn(usize) -> f64| 10.0 * (f(hi) / f(lo)).log10() / (dbm[hi] - dbm[lo]);
        println!(
            "slope 4-16 dBm: sprs {:.3} dB/dB, fwm {:.3} dB/dB\n",
            slope(&|k| rows[k].received.sprs),
            slope(&|k| rows[k].received.fwm)
        );
    }
    Ok(())
}
