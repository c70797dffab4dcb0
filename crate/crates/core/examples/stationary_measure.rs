//! Stationary harmonic measure of decorated lines by the two independent
//! methods, and the in-harmonic measure converging to it.
//!
//! ```text
//! cargo run --release --example stationary_measure
//! ```

use halfplane_hm::measures::{inharmonic, stationary_hm, Method};
use halfplane_hm::{HalfPlaneSet, Site};

fn main() -> halfplane_hm::Result<()> {
    let cases = [
        ("L0", HalfPlaneSet::l0(), Site::ORIGIN),
        (
            "L0 + (0,1)",
            HalfPlaneSet::with_sites([Site::new(0, 1)])?,
            Site::new(0, 1),
        ),
        (
            "L0 + (0,1)",
            HalfPlaneSet::with_sites([Site::new(0, 1)])?,
            Site::new(1, 0),
        ),
        ("column of 3", HalfPlaneSet::column(0, 3)?, Site::new(0, 3)),
    ];
    for (name, a, x) in &cases {
        let m = a.max_height(16) + 2;
        let vg = stationary_hm(a, *x, m, Method::VisitsGreen, None)?;
        let ls = stationary_hm(a, *x, m, Method::LineSum, None)?;
        println!(
            "{name:<12} {x:<6} visits-green {:.8}  line-sum [{:.6}, {:.6}]",
            vg.value, ls.bracket.lo, ls.bracket.hi
        );
        for n in [25, 100, 400] {
            println!(
                "{:>21} in-harmonic n = {n:>3}: {:.8}",
                "",
                inharmonic(a, n, *x)?.value
            );
        }
    }

    let profile = HalfPlaneSet::profile(0.5, 0)?;
    let x = Site::ORIGIN;
    let v = stationary_hm(&profile, x, 6, Method::VisitsGreen, None)?;
    println!(
        "profile |k|^0.5 at {x}: {:.6} in [{:.6}, {:.6}]",
        v.value, v.bracket.lo, v.bracket.hi
    );
    Ok(())
}
