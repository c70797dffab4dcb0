//! The constant c from centred segments and the scaled harmonic measure of a
//! truncated set approaching the stationary measure.
//!
//! ```text
//! cargo run --release --example scaling_limit
//! ```

use halfplane_hm::measures::{constant_c, scaling_limit_report};
use halfplane_hm::{HalfPlaneSet, Site};

fn main() -> halfplane_hm::Result<()> {
    let k = constant_c(&[25, 50, 100, 200])?;
    for (n, v) in k.series.ns.iter().zip(k.series.raw()) {
        println!("n = {n:>3}: n·H(0) = {v:.8}");
    }
    println!(
        "c = {:.7} (1/π = {:.7}), C = 2/c = {:.6}",
        k.c,
        std::f64::consts::FRAC_1_PI,
        k.big_c
    );

    let a = HalfPlaneSet::column(0, 2)?;
    let r = scaling_limit_report(&a, Site::new(0, 2), &[25, 50, 100], &k, 0.1)?;
    println!("column of 2 at (0,2): stationary {:.8}", r.reference.value);
    for ((n, v), g) in r.series.ns.iter().zip(r.series.raw()).zip(&r.relative_gaps) {
        println!("  n = {n:>3}: C·n·H = {v:.8}  relative gap {g:.2e}");
    }
    println!("  pass: {}", r.pass);
    Ok(())
}
