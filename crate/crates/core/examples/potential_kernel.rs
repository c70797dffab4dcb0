//! Build the potential kernel on a disc, check it against its asymptotics and
//! fit the additive constant.
//!
//! ```text
//! cargo run --release --example potential_kernel
//! ```

use halfplane_hm::potential::{asymptotic, fit_c0, kappa, PotentialKernel};
use halfplane_hm::Site;

fn main() -> halfplane_hm::Result<()> {
    let k = PotentialKernel::build(128)?;
    println!(
        "radius {}, harmonicity residual {:.1e}",
        k.radius(),
        k.harmonicity_residual()
    );
    for s in [
        Site::new(1, 0),
        Site::new(1, 1),
        Site::new(10, 0),
        Site::new(60, 45),
    ] {
        println!(
            "a{s:<8} = {:.12}   (2/π)ln|x| + κ = {:.12}",
            k.a(s),
            asymptotic(s)
        );
    }
    let fit = fit_c0(&k, 30.0, 120.0)?;
    println!(
        "fitted constant {:.9} (spread {:.1e} over {} sites), κ = {:.9}",
        fit.mean,
        fit.spread,
        fit.sites,
        kappa()
    );
    Ok(())
}
