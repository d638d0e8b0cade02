//! Turning interference into QBER and CV-QKD excess noise along the span,
//! from a scenario written inline.
//!
//!     cargo run --release --example qkd_metrics

use coexist::kinetics::solve;
use coexist::metrics::MetricSet;
use coexist::scenario::parse_scenario;

const SCENARIO: &str = r#"
name = "qkd-demo"

[grid]
f_min = "191.575 THz"
spacing = "50 GHz"
channels = 88
quantum_channel = 87
guard_channels = 2

[[mode_groups]]
degenerate_modes = 2
gamma = "1.3 1/W/km"
beta2 = "-21.7 ps2/km"
attenuation = "0.2 dB/km"
raman_gain = { slope = "0.0286 1/W/km/THz", peak = "0.4 1/W/km" }
rayleigh = "1e-4 1/km"

[launch]
[[launch.groups]]
total = "-10 dBm"

[metrics]
detector_bandwidth = "1 GHz"
signal_rate = "1e7 1/s"
lo_shot_noise = "1e-9 W"
"#;

fn main() -> coexist::Result<()> {
    let scn = parse_scenario(SCENARIO)?.validate()?;
    let m = &scn.spec().metrics;
    let b = m.detector_bandwidth.expect("set above");
    let f = scn.frequency(scn.quantum().channel);
    let res = solve(&scn)?;
    println!("{:>6} {:>12} {:>14} {:>10} {:>12}", "z_km", "P_int_W", "psd_mW/GHz", "QBER", "xi_SNU");
    for (z, s) in res.z_samples.iter().zip(res.quantum_trace(&scn)).step_by(10) {
        // noise collected by the detector scales with its bandwidth
        let p = s.total() * b / scn.grid().spacing;
        let set = MetricSet::new(p, f, b, m.signal_rate, m.lo_shot_noise)?;
        println!(
            "{:>6.0} {:>12.4e} {:>14.4e} {:>10.4} {:>12.4e}",
            z / 1e3,
            p,
            set.psd_mw_per_ghz(),
            set.qber.unwrap_or(f64::NAN),
            set.xi_excess.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
