use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::Site;

/// Largest box size accepted by [`rational_exit`].
pub const RATIONAL_MAX_N: i64 = 8;

/// Exact exit law of the walk from `I_n = [-n,n]×[0,n]` through its inner
/// boundary `∂ⁱⁿI_n`.
///
/// Classes: `up` is `[-n,n]×{n}` (corners included), `left`/`right` are
/// `{∓n}×[1,n−1]`, `bottom` is `[-n,n]×{0}`, and `outside` collects first
/// steps that leave `I_n` directly from a boundary start.
#[derive(Clone, Debug)]
pub struct RationalDistribution {
    pub n: i64,
    pub start: Site,
    pub site_masses: BTreeMap<Site, BigRational>,
    pub classes: BTreeMap<&'static str, BigRational>,
}

impl RationalDistribution {
    pub fn class(&self, name: &str) -> BigRational {
        self.classes
            .get(name)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.classes
            .values()
            .fold(BigRational::zero(), |a, b| a + b)
    }
}

fn edge_class(n: i64, s: Site) -> &'static str {
    if s.x2 == n {
        "up"
    } else if s.x2 == 0 {
        "bottom"
    } else if s.x1 == -n {
        "left"
    } else {
        "right"
    }
}

/// Exit distribution started from `start ∈ I_n`; from a boundary site the
/// first step is taken before absorption is checked.
pub fn rational_exit(n: i64, start: Site) -> Result<RationalDistribution> {
    if !(1..=RATIONAL_MAX_N).contains(&n) {
        return Err(Error::SizeGuard {
            size: n.max(0) as usize,
            max: RATIONAL_MAX_N as usize,
        });
    }
    let inside = |s: Site| s.x1.abs() <= n && (0..=n).contains(&s.x2);
    let interior = |s: Site| s.x1.abs() < n && s.x2 > 0 && s.x2 < n;
    if !inside(start) {
        return Err(Error::Precondition(format!("start {start} not in I_{n}")));
    }
    let cols = (2 * n - 1) as usize;
    let unknowns = cols * (n - 1) as usize;
    let idx = |s: Site| (s.x2 - 1) as usize * cols + (s.x1 + n - 1) as usize;
    let site = |i: usize| Site::new((i % cols) as i64 - n + 1, (i / cols) as i64 + 1);
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));

    let mut rhs = vec![BigRational::zero(); unknowns];
    let mut site_masses: BTreeMap<Site, BigRational> = BTreeMap::new();
    let mut outside = BigRational::zero();
    if interior(start) {
        rhs[idx(start)] = BigRational::one();
    } else {
        for s in start.neighbors() {
            if interior(s) {
                rhs[idx(s)] += &quarter;
            } else if inside(s) {
                *site_masses.entry(s).or_insert_with(BigRational::zero) += &quarter;
            } else {
                outside += &quarter;
            }
        }
    }

    // Dense (I − P) on the interior; half-bandwidth is one row.
    let mut m = vec![vec![BigRational::zero(); unknowns]; unknowns];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = BigRational::one();
        for s in site(i).neighbors() {
            if interior(s) {
                row[idx(s)] = -quarter.clone();
            }
        }
    }
    let band = cols;
    for k in 0..unknowns {
        let pivot = m[k][k].clone();
        let hi = (k + band + 1).min(unknowns);
        for r in k + 1..hi {
            if m[r][k].is_zero() {
                continue;
            }
            let f = &m[r][k] / &pivot;
            let (upper, lower) = m.split_at_mut(r);
            for (dst, src) in lower[0][k..hi].iter_mut().zip(&upper[k][k..hi]) {
                if !src.is_zero() {
                    *dst -= &f * src;
                }
            }
            let d = &f * &rhs[k];
            rhs[r] -= d;
        }
    }
    let mut g = vec![BigRational::zero(); unknowns];
    for k in (0..unknowns).rev() {
        let mut acc = rhs[k].clone();
        for c in k + 1..(k + band + 1).min(unknowns) {
            if !m[k][c].is_zero() {
                acc -= &m[k][c] * &g[c];
            }
        }
        g[k] = acc / &m[k][k];
    }

    for (i, gi) in g.iter().enumerate() {
        if gi.is_zero() {
            continue;
        }
        for s in site(i).neighbors() {
            if !interior(s) {
                *site_masses.entry(s).or_insert_with(BigRational::zero) += gi * &quarter;
            }
        }
    }
    let mut classes: BTreeMap<&'static str, BigRational> =
        ["up", "left", "right", "bottom", "outside"]
            .into_iter()
            .map(|c| (c, BigRational::zero()))
            .collect();
    for (&s, v) in &site_masses {
        *classes.get_mut(edge_class(n, s)).unwrap() += v;
    }
    *classes.get_mut("outside").unwrap() = outside;
    Ok(RationalDistribution {
        n,
        start,
        site_masses,
        classes,
    })
}
