//! Fast 100-step solve against the fine-step reference on ten upper
//! C-band channels.
//!
//!     cargo run --release --example accuracy [reference_steps]
//!
//! The default of 1e5 reference steps finishes in a few seconds; 1e6
//! takes around half a minute.

use std::path::Path;

use coexist::oracle::verify;
use coexist::scenario::parse_scenario_file;

fn main() -> coexist::Result<()> {
    let steps = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("reference steps must be an integer"))
        .unwrap_or(100_000);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/upper_cband_accuracy.toml");
    let scn = parse_scenario_file(&path)?.validate()?;
    let report = verify(&scn, steps)?;
    print!("{}", report.summary());
    println!();
    println!("{:<18} {:>8} {:>13} {:>13} {:>9}", "quantity", "z_km", "reference_W", "fast_W", "dB");
    for r in &report.rows {
        println!(
            "{:<18} {:>8.1} {:>13.5e} {:>13.5e} {:>9.4}",
            r.quantity,
            r.z / 1e3,
            r.reference,
            r.target,
            r.error_db()
        );
    }
    Ok(())
}
