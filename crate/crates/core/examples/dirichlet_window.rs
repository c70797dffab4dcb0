//! Hitting distributions in a finite window: gambler's ruin in a strip and
//! the mass leaking through an open window edge.
//!
//! ```text
//! cargo run --release --example dirichlet_window
//! ```

use halfplane_hm::dirichlet::{hit_distribution, kick_start, AbsorbingProblem};
use halfplane_hm::{Site, Window};

fn main() -> halfplane_hm::Result<()> {
    for n in [2i64, 5, 10, 20] {
        let w = Window::new(-12 * n, 12 * n, 1, n - 1)?;
        let p = AbsorbingProblem::new(w)
            .with_line("L0", 0)?
            .with_line("Ln", n)?;
        let d = kick_start(Site::ORIGIN, &p)?;
        println!(
            "n = {n:>2}: P(reach L_n before L_0) = {:.12}  1/(4n) = {:.12}  ({} CG iterations)",
            d.class_mass("Ln"),
            0.25 / n as f64,
            d.iterations
        );
    }

    let w = Window::new(-6, 6, 1, 8)?;
    let p = AbsorbingProblem::new(w)
        .with_line("floor", 0)?
        .with_class("post", (1..=4).map(|h| Site::new(2, h)))?;
    let d = hit_distribution(Site::new(-1, 3), &p)?;
    println!(
        "box with a post: floor {:.6}, post {:.6}, leaked through the open sides and top {:.6}",
        d.class_mass("floor"),
        d.class_mass("post"),
        d.defect
    );
    Ok(())
}
