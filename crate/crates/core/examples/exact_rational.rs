//! Exact exit distributions of a small box in rational arithmetic.
//!
//! ```text
//! cargo run --release --example exact_rational
//! ```

use halfplane_hm::dirichlet::rational_exit;
use halfplane_hm::Site;

fn main() -> halfplane_hm::Result<()> {
    for n in 2..=5 {
        let d = rational_exit(n, Site::new(0, 1))?;
        let parts: Vec<String> = d
            .classes
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect();
        println!("n = {n}: {}", parts.join(", "));
        println!("       total {}", d.total());
    }
    Ok(())
}
