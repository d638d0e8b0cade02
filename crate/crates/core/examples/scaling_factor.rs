//! Nonlinear scaling factor r for a few mode counts and Raman fractions.
//!
//!     cargo run --example scaling_factor

use coexist::profiles::nonlinear_scaling_factor;

fn main() {
    println!("r(D = 2, F_R = 0.18) = {:.4}", nonlinear_scaling_factor(2, 0.18));
    println!();
    println!("{:>3} {:>8} {:>8} {:>8}", "D", "F_R=0", "F_R=0.18", "F_R=0.3");
    for d in [1, 2, 4, 6, 12] {
        println!(
            "{d:>3} {:>8.4} {:>8.4} {:>8.4}",
            nonlinear_scaling_factor(d, 0.0),
            nonlinear_scaling_factor(d, 0.18),
            nonlinear_scaling_factor(d, 0.3)
        );
    }
}
