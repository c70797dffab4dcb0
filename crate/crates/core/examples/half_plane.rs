//! The half-plane walk: Poisson kernel of the bare line and the hitting
//! distribution of a decorated line.
//!
//! ```text
//! cargo run --release --example half_plane
//! ```

use std::f64::consts::PI;

use halfplane_hm::halfplane::HalfPlaneSolver;
use halfplane_hm::Site;

fn main() -> halfplane_hm::Result<()> {
    let bare = HalfPlaneSolver::new(&[])?;
    let n = 100;
    println!("bare line, start (0,{n}):");
    for x in [0, 25, 50, 100, 200] {
        let p = bare.hit(Site::new(0, n), Site::new(x, 0))?;
        let cauchy = n as f64 / (PI * (n * n + x * x) as f64);
        println!("  x = {x:>3}: {p:.8e}   continuum {cauchy:.8e}");
    }

    let deco = [Site::new(0, 1), Site::new(0, 2), Site::new(3, 1)];
    let s = HalfPlaneSolver::new(&deco)?;
    let start = Site::new(1, 40);
    println!("decorated line, start {start}:");
    for x in [
        Site::new(0, 2),
        Site::new(0, 1),
        Site::new(3, 1),
        Site::new(1, 0),
        Site::new(2, 0),
    ] {
        println!("  {x:<8} {:.6e}", s.hit(start, x)?);
    }
    Ok(())
}
