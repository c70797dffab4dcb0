//! Run a few property checks and print their criteria.
//!
//! ```text
//! cargo run --release --example property_checks
//! ```

use halfplane_hm::checks::{run_check, CheckId, CheckParams};

fn main() -> halfplane_hm::Result<()> {
    let quick = [
        (
            CheckId::Reflection,
            CheckParams {
                n: Some(vec![2, 3, 4, 8, 16]),
                ..CheckParams::default()
            },
        ),
        (
            CheckId::Halfbox,
            CheckParams {
                n: Some(vec![16, 32, 64]),
                ..CheckParams::default()
            },
        ),
        (
            CheckId::Flatness,
            CheckParams {
                n: Some(vec![16, 32, 64]),
                ..CheckParams::default()
            },
        ),
    ];
    for (id, params) in quick {
        let r = run_check(id, &params)?;
        println!("{id}: {}", r.verdict);
        for c in &r.criteria {
            println!(
                "  {:<28} {:<12} {}",
                c.name,
                c.verdict.to_string(),
                c.detail
            );
        }
    }
    Ok(())
}
