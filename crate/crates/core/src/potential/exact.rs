//! Exact construction of the potential kernel.
//!
//! Every value has the form `a(x) = P + (4/π)·Q/L` with integers `P`, `Q` and
//! `L = lcm(1, 3, 5, …)`. The diagonal is `a(m,m) = (4/π) Σ_{j≤m} 1/(2j-1)`,
//! `a(1,0) = 1`, and discrete harmonicity fills the rest of the octant
//! `0 ≤ x2 ≤ x1` one off-diagonal row at a time. The recursion is violently
//! unstable in floating point, so it runs on big integers and each value is
//! rounded to `f64` only at the end.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

/// `floor(π · 2^bits)` via Machin's formula.
pub(crate) fn pi_fixed(bits: u64) -> BigInt {
    let guard = 32;
    let one = BigInt::one() << (bits + guard);
    let atan_inv = |x: u32| -> BigInt {
        let x = BigInt::from(x);
        let x2 = &x * &x;
        let mut power = &one / &x;
        let mut sum = power.clone();
        let mut k = 1u64;
        loop {
            power = &power / &x2;
            if power.is_zero() {
                break;
            }
            let term = &power / BigInt::from(2 * k + 1);
            if k % 2 == 1 {
                sum -= term;
            } else {
                sum += term;
            }
            k += 1;
        }
        sum
    };
    let pi = atan_inv(5) * 16 - atan_inv(239) * 4;
    pi >> guard
}

/// Octant table: `values[i*(i+1)/2 + j] = a(i, j)` for `0 ≤ j ≤ i ≤ radius`.
pub(crate) fn octant(radius: usize) -> Vec<f64> {
    let r = radius;
    // Row d holds a(m+d, m); row d+1 at position m needs row d-1 at m+1.
    let len = |d: usize| (r - d) + (r - d).div_ceil(2) + 2;
    let diag_len = len(0);

    let mut lcm = BigInt::one();
    for j in 1..=diag_len {
        lcm = lcm.lcm(&BigInt::from(2 * j - 1));
    }

    // Row 0: a(m,m) = (4/π) Σ_{j=1}^m 1/(2j-1).
    let mut q0 = Vec::with_capacity(diag_len);
    let mut acc = BigInt::zero();
    q0.push(acc.clone());
    for j in 1..diag_len {
        acc += &lcm / BigInt::from(2 * j - 1);
        q0.push(acc.clone());
    }
    let p0 = vec![BigInt::zero(); diag_len];

    // Row 1: a(m+1,m) = 2 a(m,m) - a(m,m-1), a(1,0) = 1.
    let l1 = len(1).min(diag_len);
    let mut p1 = Vec::with_capacity(l1);
    let mut q1 = Vec::with_capacity(l1);
    p1.push(BigInt::one());
    q1.push(BigInt::zero());
    for m in 1..l1 {
        let p = &p0[m] * 2 - &p1[m - 1];
        let q = &q0[m] * 2 - &q1[m - 1];
        p1.push(p);
        q1.push(q);
    }

    // Bits of headroom: the recursion grows by roughly 3+2√2 per row.
    let growth_bits = (r as f64 * 3.0) as u64 + 64;
    let frac_bits = growth_bits + lcm.bits() + 96;
    let pi = pi_fixed(frac_bits + 8);
    // kappa = floor(4 · 2^(2F+8) / (π_fixed · L)) ≈ 4/(π L) · 2^F
    let kappa: BigInt = (BigInt::from(4) << (2 * frac_bits + 8)) / (&pi * &lcm);

    let to_f64 = |p: &BigInt, q: &BigInt| -> f64 {
        let num: BigInt = (p << frac_bits) + q * &kappa;
        let shift = frac_bits - 62;
        let top = &num >> shift;
        let v = top.to_f64().unwrap_or(f64::NAN);
        let v = if num.sign() == Sign::Minus && top.is_zero() {
            -0.0
        } else {
            v
        };
        v / (1u64 << 62) as f64
    };

    let mut out = vec![0.0; (r + 1) * (r + 2) / 2];
    let mut store = |d: usize, p: &[BigInt], q: &[BigInt]| {
        let vals: Vec<f64> = (0..=(r - d))
            .into_par_iter()
            .map(|m| to_f64(&p[m], &q[m]))
            .collect();
        for (m, v) in vals.into_iter().enumerate() {
            let i = m + d;
            out[i * (i + 1) / 2 + m] = v;
        }
    };
    store(0, &p0, &q0);
    if r >= 1 {
        store(1, &p1, &q1);
    }

    let (mut pp, mut qp) = (p0, q0);
    let (mut pc, mut qc) = (p1, q1);
    for d in 1..r {
        let n = len(d + 1);
        let mut pn: Vec<BigInt> = Vec::with_capacity(n);
        let mut qn: Vec<BigInt> = Vec::with_capacity(n);
        pn.push(&pc[0] * 4 - &pp[0] - &pp[1] * 2);
        qn.push(&qc[0] * 4 - &qp[0] - &qp[1] * 2);
        for m in 1..n {
            let p = &pc[m] * 4 - &pp[m] - &pp[m + 1] - &pn[m - 1];
            let q = &qc[m] * 4 - &qp[m] - &qp[m + 1] - &qn[m - 1];
            pn.push(p);
            qn.push(q);
        }
        let widest = qn.iter().chain(&pn).map(|q| q.bits()).max().unwrap_or(0);
        assert!(
            widest + 62 < frac_bits,
            "potential kernel recursion outgrew its fixed-point headroom at row {d}"
        );
        store(d + 1, &pn, &qn);
        pp = std::mem::replace(&mut pc, pn);
        qp = std::mem::replace(&mut qc, qn);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_digits() {
        let p = pi_fixed(200);
        let approx = (&p >> 148u32).to_f64().unwrap() / (1u64 << 52) as f64;
        assert_eq!(approx, std::f64::consts::PI);
    }

    #[test]
    fn small_exact_values() {
        let t = octant(4);
        let at = |i: usize, j: usize| t[i * (i + 1) / 2 + j];
        let pi = std::f64::consts::PI;
        assert_eq!(at(0, 0), 0.0);
        assert_eq!(at(1, 0), 1.0);
        assert!((at(1, 1) - 4.0 / pi).abs() < 1e-15);
        assert!((at(2, 0) - (4.0 - 8.0 / pi)).abs() < 1e-15);
        assert!((at(2, 1) - (8.0 / pi - 1.0)).abs() < 1e-15);
        assert!((at(2, 2) - 16.0 / (3.0 * pi)).abs() < 1e-15);
    }
}
