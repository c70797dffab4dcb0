//! Reproducible Monte Carlo: the in-harmonic measure estimated by walks from
//! height n, compared with the exact value. Re-running gives the same numbers
//! for any thread count.
//!
//! Walks still running at the step cap count as misses, so the default cap
//! `64n²` biases the estimate low by roughly the timeout fraction times the
//! chance a far-away walker still lands on `x`. A longer cap removes most of it.
//!
//! ```text
//! cargo run --release --example monte_carlo
//! ```

use std::f64::consts::PI;

use halfplane_hm::measures::inharmonic;
use halfplane_hm::montecarlo::{mc_hit, mc_inharmonic, RngSpec};
use halfplane_hm::{HalfPlaneSet, Site};

fn main() -> halfplane_hm::Result<()> {
    let a = HalfPlaneSet::with_sites([Site::new(0, 1)])?;
    let x = Site::new(0, 1);
    let absorbing = |s: Site| a.contains(s);
    for n in [4i64, 8] {
        let exact = inharmonic(&a, n, x)?.value;
        let spec = RngSpec::new(42).substream(n as u64);
        let short = mc_inharmonic(&a, n, x, 100_000, spec);
        let long =
            mc_hit(Site::new(0, n), &absorbing, x, 20_000, 1 << 22, spec).scaled(PI * n as f64);
        println!("n = {n}: exact {exact:.5}");
        for (label, e) in [("cap 64n²", short), ("cap 2^22", long)] {
            println!(
                "  {label}: {:.5} ± {:.5}  timeouts {:.1e}  within 3σ: {}",
                e.mean,
                e.std_error,
                e.timeout_fraction,
                e.agrees(exact, 3.0)
            );
        }
    }
    Ok(())
}
