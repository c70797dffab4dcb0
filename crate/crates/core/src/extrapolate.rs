//! Sequence acceleration for limits over growing `n`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Extrapolation {
    /// Aitken Δ² on the last three values.
    Aitken,
    /// Richardson elimination of an `n^-order` error term on the last two values.
    Richardson { order: f64 },
    /// No acceleration: the last value.
    Last,
}

impl Extrapolation {
    pub fn tag(&self) -> &'static str {
        match self {
            Extrapolation::Aitken => "aitken",
            Extrapolation::Richardson { .. } => "richardson",
            Extrapolation::Last => "last",
        }
    }

    /// Estimated limit of `values` indexed by `ns`; `None` when the series is
    /// too short for the method.
    pub fn apply(&self, ns: &[f64], values: &[f64]) -> Option<f64> {
        match *self {
            Extrapolation::Aitken => aitken(values),
            Extrapolation::Richardson { order } => richardson(ns, values, order),
            Extrapolation::Last => values.last().copied(),
        }
    }
}

/// `x₂ − (x₂ − x₁)² / ((x₂ − x₁) − (x₁ − x₀))` on the last three terms; falls
/// back to the last term when the second difference vanishes.
pub fn aitken(values: &[f64]) -> Option<f64> {
    let [x0, x1, x2] = values.get(values.len().checked_sub(3)?..)? else {
        return None;
    };
    let (d1, d2) = (x1 - x0, x2 - x1);
    let dd = d2 - d1;
    if dd == 0.0 || !dd.is_finite() {
        return Some(*x2);
    }
    Some(x2 - d2 * d2 / dd)
}

/// `(n₁^p x₁ − n₀^p x₀) / (n₁^p − n₀^p)` on the last two terms.
pub fn richardson(ns: &[f64], values: &[f64], order: f64) -> Option<f64> {
    if ns.len() != values.len() || values.len() < 2 {
        return None;
    }
    let k = values.len();
    let (n0, n1) = (ns[k - 2].powf(order), ns[k - 1].powf(order));
    Some((n1 * values[k - 1] - n0 * values[k - 2]) / (n1 - n0))
}

/// Absolute successive differences.
pub fn gaps(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

/// Whether successive gaps shrink strictly.
pub fn gaps_decreasing(values: &[f64]) -> bool {
    let g = gaps(values);
    g.len() >= 2 && g.windows(2).all(|w| w[1] < w[0])
}

/// Whether the last three terms move in one direction.
pub fn is_monotone_tail(values: &[f64]) -> bool {
    match values.get(values.len().saturating_sub(3)..) {
        Some([a, b, c]) => (b - a) * (c - b) > 0.0,
        _ => false,
    }
}

/// Plausibility of an extrapolated `limit`: for a monotone tail it must lie on
/// the continuation side of the last term; otherwise inside the hull of the
/// last three terms.
pub fn limit_consistent(values: &[f64], limit: f64) -> bool {
    let Some(tail) = values.get(values.len().saturating_sub(3)..) else {
        return false;
    };
    if tail.len() < 3 {
        return false;
    }
    if is_monotone_tail(values) {
        let dir = (tail[2] - tail[1]).signum();
        (limit - tail[2]) * dir >= 0.0
    } else {
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo..=hi).contains(&limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn aitken_is_exact_on_geometric_tails() {
        let v: Vec<f64> = (0..6).map(|k| 2.0 + 3.0 * 0.5f64.powi(k)).collect();
        assert!((aitken(&v).unwrap() - 2.0).abs() < 1e-12);
        assert!(aitken(&v[..2]).is_none());
        assert_eq!(aitken(&[1.0, 1.0, 1.0]), Some(1.0));
    }

    #[test]
    fn richardson_removes_the_leading_term() {
        let ns = [25.0, 50.0, 100.0];
        let v: Vec<f64> = ns.iter().map(|n| 0.3 + 1.7 / n).collect();
        assert!((richardson(&ns, &v, 1.0).unwrap() - 0.3).abs() < 1e-14);
        let e = Extrapolation::Richardson { order: 1.0 };
        assert_eq!(e.tag(), "richardson");
        assert!((e.apply(&ns, &v).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn gap_diagnostics() {
        assert!(gaps_decreasing(&[1.0, 0.5, 0.3, 0.25]));
        assert!(!gaps_decreasing(&[1.0, 0.9, 0.5]));
        assert!(is_monotone_tail(&[3.0, 2.0, 1.5]));
        assert!(limit_consistent(&[3.0, 2.0, 1.5], 1.0));
        assert!(!limit_consistent(&[3.0, 2.0, 1.5], 1.7));
        assert!(limit_consistent(&[1.0, 2.0, 1.5], 1.6));
    }

    proptest! {
        #[test]
        fn aitken_limit_consistent_on_geometric(l in -5.0f64..5.0, a in 0.1f64..3.0, r in -0.9f64..0.9) {
            prop_assume!(r.abs() > 0.05);
            let v: Vec<f64> = (0..5).map(|k| l + a * r.powi(k)).collect();
            let lim = aitken(&v).unwrap();
            prop_assert!((lim - l).abs() < 1e-8);
            prop_assert!(limit_consistent(&v, lim));
        }
    }
}
