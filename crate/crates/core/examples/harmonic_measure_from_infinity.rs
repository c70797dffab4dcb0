//! Harmonic measure from infinity of a segment and of an L-shaped set, with a
//! Monte Carlo cross-check from a launching circle.
//!
//! ```text
//! cargo run --release --example harmonic_measure_from_infinity
//! ```

use halfplane_hm::lattice::segment;
use halfplane_hm::montecarlo::{mc_hm_from_circle, RngSpec};
use halfplane_hm::potential::hm_infinity;
use halfplane_hm::{Site, SiteSet};

fn main() -> halfplane_hm::Result<()> {
    let seg: SiteSet = segment(10).into_iter().collect();
    let hm = hm_infinity(&seg)?;
    println!(
        "segment D_10: robin {:.6}, total mass {:.12}",
        hm.robin,
        hm.measure.total()
    );
    for x1 in [0, 5, 9, 10] {
        println!("  H({x1:>2},0) = {:.6}", hm.mass(Site::new(x1, 0)));
    }

    let ell: SiteSet = (0..6)
        .map(|i| Site::new(i, 0))
        .chain((1..4).map(|j| Site::new(0, j)))
        .collect();
    let hm = hm_infinity(&ell)?;
    let corner = Site::new(0, 0);
    let mc = mc_hm_from_circle(&ell, 14, corner, 20_000, None, RngSpec::new(7));
    println!(
        "L-shape: inner corner {:.5}, Monte Carlo {:.5} ± {:.5}",
        hm.mass(corner),
        mc.site.mean,
        mc.site.std_error
    );
    for (s, _, m) in hm.measure.iter() {
        println!("  {s:<8} {m:.6}");
    }
    Ok(())
}
