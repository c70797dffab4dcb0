//! Property checks on discrete harmonic measures.
//!
//! Every check returns a [`CheckReport`] holding the evidence rows it computed
//! and one verdict per criterion. Shrinking quantities are judged between the
//! smallest and largest parameter only, and only when their uncertainty
//! intervals separate; otherwise the verdict is inconclusive.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dirichlet::{
    escape_probability, kick_start, rational_exit, AbsorbingProblem, DEFAULT_TOLERANCE,
    RATIONAL_MAX_N,
};
use crate::error::{Error, Result};
use crate::extrapolate::{aitken, gaps, gaps_decreasing, limit_consistent};
use crate::lattice::{
    box_height, floor_pow, half_box, segment, special_regions, FLines, GrowthCertificate,
    HalfPlaneSet, SetSpec, Site, Window,
};
use crate::measures::{inharmonic, stationary_hm, truncated_solver, Method};
use crate::montecarlo::circle;
use crate::potential::FiniteSetSolver;

/// Numerical floor attached to every probability produced by a dense solve.
pub const NUMERIC_FLOOR: f64 = 1e-10;

/// Largest `n` handled by the exact rational reflection check.
pub const EXACT_REFLECTION_MAX: i64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    /// Combined verdict: any failure wins, then any inconclusive criterion.
    pub fn all(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
        vs.into_iter().max().unwrap_or(Verdict::Inconclusive)
    }

    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Process exit code: 0 pass, 1 fail, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

/// One computed number with its uncertainty interval.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub quantity: String,
    /// Scale parameter (`n` or `m`).
    pub index: i64,
    /// Secondary parameter such as `δ`, when the quantity has one.
    pub param: Option<f64>,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl EvidenceRow {
    fn new(quantity: &str, index: i64, value: f64, half_width: f64) -> Self {
        EvidenceRow {
            quantity: quantity.to_string(),
            index,
            param: None,
            value,
            lo: value - half_width,
            hi: value + half_width,
        }
    }

    fn with_param(mut self, p: f64) -> Self {
        self.param = Some(p);
        self
    }

    fn half_width(&self) -> f64 {
        (self.hi - self.value).max(self.value - self.lo)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: CheckId,
    pub params: Value,
    pub observed: Value,
    pub criteria: Vec<Criterion>,
    pub verdict: Verdict,
    pub rows: Vec<EvidenceRow>,
    /// Where the evidence was written, once it has been.
    pub evidence: Option<PathBuf>,
}

impl CheckReport {
    fn new(id: CheckId, params: Value) -> Self {
        CheckReport {
            id,
            params,
            observed: json!({}),
            criteria: Vec::new(),
            verdict: Verdict::Inconclusive,
            rows: Vec::new(),
            evidence: None,
        }
    }

    fn criterion(&mut self, name: &str, verdict: Verdict, detail: impl Into<String>) {
        self.criteria.push(Criterion {
            name: name.to_string(),
            verdict,
            detail: detail.into(),
        });
    }

    fn observe(&mut self, key: &str, v: impl Serialize) {
        self.observed[key] = serde_json::to_value(v).unwrap_or(Value::Null);
    }

    fn finish(mut self) -> Self {
        self.verdict = Verdict::all(self.criteria.iter().map(|c| c.verdict));
        self
    }

    /// Evidence rows of one quantity, in parameter order.
    pub fn series(&self, quantity: &str) -> Vec<&EvidenceRow> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity)
            .collect()
    }

    pub fn criterion_verdict(&self, name: &str) -> Option<Verdict> {
        self.criteria
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.verdict)
    }
}

/// Verdict on `first > last` for a sequence of `(value, half_width)` points.
pub fn strict_decrease(points: &[(f64, f64)]) -> (Verdict, String) {
    if points.len() < 3 {
        return (
            Verdict::Inconclusive,
            format!("{} points, need at least 3", points.len()),
        );
    }
    let (v0, u0) = points[0];
    let (v1, u1) = points[points.len() - 1];
    let bumps = points.windows(2).filter(|w| w[1].0 >= w[0].0).count();
    let note = if bumps > 0 {
        format!(" ({bumps} intermediate non-decreasing step(s))")
    } else {
        String::new()
    };
    let detail = format!("first {v0:.6e} ± {u0:.1e}, last {v1:.6e} ± {u1:.1e}{note}");
    if v1 + u1 < v0 - u0 {
        (Verdict::Pass, detail)
    } else if v1 - u1 >= v0 + u0 {
        (Verdict::Fail, detail)
    } else {
        (Verdict::Inconclusive, detail)
    }
}

/// Verdict on `max / min ≤ bound` for positive intervals `[lo, hi]`.
fn spread_within(points: &[(f64, f64)], bound: f64) -> (Verdict, String) {
    let max_hi = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min_lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_lo = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_hi = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let detail = format!(
        "spread between {:.4} and {:.4}, bound {bound}",
        max_lo / min_hi,
        max_hi / min_lo
    );
    if points.is_empty() || min_lo <= 0.0 {
        (Verdict::Inconclusive, detail)
    } else if max_hi / min_lo <= bound {
        (Verdict::Pass, detail)
    } else if max_lo / min_hi > bound {
        (Verdict::Fail, detail)
    } else {
        (Verdict::Inconclusive, detail)
    }
}

fn decrease_over(rows: &[&EvidenceRow]) -> (Verdict, String) {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.value, r.half_width())).collect();
    strict_decrease(&pts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    Reflection,
    TailEscape,
    Flatness,
    Segment,
    EscapeBounds,
    Away,
    LineDecomposition,
    BoxCoupling,
    Halfbox,
    Schedule,
}

impl CheckId {
    pub const ALL: [CheckId; 10] = [
        CheckId::Reflection,
        CheckId::TailEscape,
        CheckId::Flatness,
        CheckId::Segment,
        CheckId::EscapeBounds,
        CheckId::Away,
        CheckId::LineDecomposition,
        CheckId::BoxCoupling,
        CheckId::Halfbox,
        CheckId::Schedule,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckId::Reflection => "reflection",
            CheckId::TailEscape => "tail-escape",
            CheckId::Flatness => "flatness",
            CheckId::Segment => "segment",
            CheckId::EscapeBounds => "escape-bounds",
            CheckId::Away => "away",
            CheckId::LineDecomposition => "line-decomposition",
            CheckId::BoxCoupling => "box-coupling",
            CheckId::Halfbox => "halfbox",
            CheckId::Schedule => "schedule",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = CheckId::ALL.iter().map(|c| c.name()).collect();
                Error::Precondition(format!("unknown check {s:?}; known: {}", known.join(", ")))
            })
    }
}

/// Optional overrides for a check; anything left out takes the check's default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckParams {
    pub n: Option<Vec<i64>>,
    pub m: Option<Vec<i64>>,
    pub deltas: Option<Vec<f64>>,
    pub set: Option<SetSpec>,
    pub x: Option<[i64; 2]>,
    pub alpha: Option<f64>,
    /// Multiplier `k` in the half-box depth `m = ⌊k·n^{α₁}⌋`.
    pub m_factor: Option<f64>,
    /// Escape radius multiplier for the lower bound.
    pub c0: Option<f64>,
}

impl CheckParams {
    fn ns(&self, default: &[i64]) -> Vec<i64> {
        self.n.clone().unwrap_or_else(|| default.to_vec())
    }

    fn set_and_site(&self) -> Result<(HalfPlaneSet, Site)> {
        let a = match &self.set {
            Some(spec) => spec.build()?,
            None => HalfPlaneSet::with_sites([Site::new(0, 1)])?,
        };
        let x = match self.x {
            Some([a1, a2]) => Site::new(a1, a2),
            None => a
                .decoration()
                .iter()
                .copied()
                .max_by_key(|s| s.x2)
                .unwrap_or(Site::ORIGIN),
        };
        if !a.contains(x) {
            return Err(Error::Precondition(format!("{x} is not in the set")));
        }
        Ok((a, x))
    }
}

/// Run one check with its defaults filled in from `params`.
pub fn run_check(id: CheckId, params: &CheckParams) -> Result<CheckReport> {
    log::info!("running check {id}");
    match id {
        CheckId::Reflection => check_reflection(&params.ns(&[2, 3, 4, 5, 6, 8, 16, 32, 64])),
        CheckId::TailEscape => check_tail_escape(
            &params.m.clone().unwrap_or(vec![4, 8, 16]),
            params.alpha.unwrap_or(0.5),
        ),
        CheckId::Flatness => check_flatness(
            &params.ns(&[16, 32, 64, 128]),
            &params.deltas.clone().unwrap_or(vec![0.02, 0.1, 0.2]),
        ),
        CheckId::Segment => check_segment(
            &params.deltas.clone().unwrap_or(vec![0.25, 0.5, 1.0]),
            &params.ns(&[32, 64, 128, 256, 512]),
        ),
        CheckId::EscapeBounds => {
            check_escape_bounds(&params.ns(&[25, 50, 100, 200]), params.c0.unwrap_or(4.0))
        }
        CheckId::Away => {
            let (a, x) = params.set_and_site()?;
            check_away(&a, x, &params.ns(&[16, 32, 64]))
        }
        CheckId::LineDecomposition => {
            let (a, x) = params.set_and_site()?;
            check_line_decomposition(&a, x, &params.ns(&[16, 32, 64]))
        }
        CheckId::BoxCoupling => check_box_coupling(&params.ns(&[16, 32, 64])),
        CheckId::Halfbox => {
            check_halfbox(&params.ns(&[32, 64, 128]), params.m_factor.unwrap_or(2.0))
        }
        CheckId::Schedule => {
            let (a, x) = params.set_and_site()?;
            let a = match params.alpha {
                Some(al) => {
                    let k0 = a.growth().k0;
                    a.with_growth(GrowthCertificate::new(al, k0)?)
                }
                None => a,
            };
            check_schedule(&a, x, &params.m.clone().unwrap_or(vec![4, 6, 8]))
        }
    }
}

/// Run several checks in parallel, in the given order.
pub fn run_checks(ids: &[CheckId], params: &CheckParams) -> Vec<Result<CheckReport>> {
    ids.par_iter().map(|&id| run_check(id, params)).collect()
}

fn require_sorted(values: &[i64], what: &str) -> Result<()> {
    if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) || values[0] < 1 {
        return Err(Error::Precondition(format!(
            "{what} must be positive and strictly increasing"
        )));
    }
    Ok(())
}

/// Exit from `I_n` through the up edge dominates exit through the two sides.
pub fn check_reflection(ns: &[i64]) -> Result<CheckReport> {
    require_sorted(ns, "n values")?;
    let mut rep = CheckReport::new(CheckId::Reflection, json!({ "n": ns }));
    let mut exact = Vec::new();
    for &n in ns {
        if n <= EXACT_REFLECTION_MAX.min(RATIONAL_MAX_N) {
            let d = rational_exit(n, Site::ORIGIN)?;
            let (up, left, right) = (d.class("up"), d.class("left"), d.class("right"));
            let margin = &up - (&left + &right);
            let ok = margin >= num_rational::BigRational::zero();
            rep.criterion(
                &format!("exact-n{n}"),
                Verdict::from_bool(ok),
                format!("up = {up}, left = {left}, right = {right}"),
            );
            rep.criterion(
                &format!("symmetry-n{n}"),
                Verdict::from_bool(left == right),
                "left = right exactly",
            );
            let f = |q: &num_rational::BigRational| -> f64 {
                num_traits::ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
            };
            rep.rows
                .push(EvidenceRow::new("margin", n, f(&margin), 0.0));
            exact.push(json!({"n": n, "up": up.to_string(), "left": left.to_string(), "right": right.to_string()}));
        } else {
            let d = reflection_float(n)?;
            let margin = d.0 - (d.1 + d.2);
            let tol = 1e3 * DEFAULT_TOLERANCE;
            let v = if margin > tol {
                Verdict::Pass
            } else if margin < -tol {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            };
            rep.criterion(
                &format!("float-n{n}"),
                v,
                format!(
                    "up {:.12e}, sides {:.12e}, margin {margin:.3e}",
                    d.0,
                    d.1 + d.2
                ),
            );
            rep.rows.push(EvidenceRow::new("margin", n, margin, tol));
        }
    }
    rep.observe("exact", exact);
    Ok(rep.finish())
}

/// `(up, left, right)` exit masses of `I_n` from the origin by the window solver.
pub fn reflection_float(n: i64) -> Result<(f64, f64, f64)> {
    let w = Window::new(-n + 1, n - 1, 1, n - 1)?;
    let p = AbsorbingProblem::new(w)
        .with_class("up", (-n + 1..n).map(|k| Site::new(k, n)))?
        .with_class("left", (1..n).map(|k| Site::new(-n, k)))?
        .with_class("right", (1..n).map(|k| Site::new(n, k)))?
        .with_class("bottom", (-n + 1..n).map(|k| Site::new(k, 0)))?;
    let d = kick_start(Site::ORIGIN, &p)?;
    Ok((
        d.class_mass("up"),
        d.class_mass("left"),
        d.class_mass("right"),
    ))
}

/// Certified bracket for `P_0(τ_F < τ_{L₀})` with `F` the half-lines
/// `{±⌊m^{1/α}⌋} × Z≥0`, on a strip closed at height `4·offset`. The first
/// step below `L₀` leaves the strip and can never reach `F` first.
pub fn tail_escape_probability(m: i64, alpha: f64) -> Result<(f64, f64, i64)> {
    let d = FLines::new(m, alpha).offset;
    if d < 2 {
        return Err(Error::Precondition(format!(
            "line offset {d} too small for m={m}"
        )));
    }
    let top = 4 * d;
    let w = Window::new(-d + 1, d - 1, 1, top)?;
    let p = AbsorbingProblem::new(w)
        .with_class(
            "F",
            (1..=top).flat_map(|k| [Site::new(-d, k), Site::new(d, k)]),
        )?
        .with_class("top", (-d + 1..d).map(|k| Site::new(k, top + 1)))?
        .with_line("L0", 0)?;
    let dist = kick_start(Site::ORIGIN, &p)?;
    let lo = dist.class_mass("F");
    debug_assert!((dist.defect - 0.25).abs() < 1e-9);
    Ok((lo, lo + dist.class_mass("top"), d))
}

/// `m^{1/α} · P_0(τ_F < τ_{L₀})` stays bounded across `m`.
pub fn check_tail_escape(ms: &[i64], alpha: f64) -> Result<CheckReport> {
    require_sorted(ms, "m values")?;
    GrowthCertificate::new(alpha, 0)?;
    let mut rep = CheckReport::new(CheckId::TailEscape, json!({ "m": ms, "alpha": alpha }));
    let probs: Vec<(f64, f64, i64)> = ms
        .par_iter()
        .map(|&m| tail_escape_probability(m, alpha))
        .collect::<Result<_>>()?;
    let mut scaled = Vec::new();
    for (&m, &(lo, hi, d)) in ms.iter().zip(&probs) {
        let k = (m as f64).powf(1.0 / alpha);
        let mid = 0.5 * (lo + hi);
        rep.rows
            .push(EvidenceRow::new("probability", m, mid, 0.5 * (hi - lo)));
        rep.rows
            .push(EvidenceRow::new("scaled", m, mid * k, 0.5 * (hi - lo) * k));
        rep.rows.push(EvidenceRow::new("offset", m, d as f64, 0.0));
        scaled.push((lo * k, hi * k));
    }
    let (v, detail) = spread_within(&scaled, 4.0);
    rep.criterion("scaled-bounded", v, detail);
    let below_one = probs.iter().all(|p| p.1 < 1.0);
    rep.criterion(
        "probability-below-one",
        Verdict::from_bool(below_one),
        "every upper bracket end < 1",
    );
    let falling = probs.windows(2).map(|w| {
        if w[1].1 < w[0].0 {
            Verdict::Pass
        } else if w[1].0 >= w[0].1 {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    });
    rep.criterion(
        "raw-decreasing",
        Verdict::all(falling.chain(std::iter::once(if probs.len() < 2 {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }))),
        "each larger m has a smaller escape probability",
    );
    rep.observe(
        "fitted_constant",
        scaled.iter().map(|s| 0.5 * (s.0 + s.1)).sum::<f64>() / scaled.len() as f64,
    );
    Ok(rep.finish())
}

/// Flatness profile `n · max_{|x₁| ≤ δn} |H_{D_n}(x) − H_{D_n}(0)|`, split
/// by the parity of `x₁`.
pub fn flatness_profile(solver: &FiniteSetSolver, n: i64, delta: f64) -> (f64, f64) {
    let h0 = solver.hm(Site::ORIGIN);
    let k = (delta * n as f64).floor() as i64;
    let (mut even, mut odd) = (0.0f64, 0.0f64);
    for x1 in -k..=k {
        let d = (solver.hm(Site::new(x1, 0)) - h0).abs();
        if x1 % 2 == 0 {
            even = even.max(d);
        } else {
            odd = odd.max(d);
        }
    }
    (n as f64 * even, n as f64 * odd)
}

/// Continuum value of the flatness profile for the unit interval.
pub fn flatness_continuum(delta: f64) -> f64 {
    (1.0 / (1.0 - delta * delta).sqrt() - 1.0) / PI
}

/// Harmonic measure from infinity of `D_n` near the center is flat on scale `n`.
pub fn check_flatness(ns: &[i64], deltas: &[f64]) -> Result<CheckReport> {
    require_sorted(ns, "n values")?;
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
        return Err(Error::Precondition("deltas must lie in (0, 1]".into()));
    }
    let mut ds = deltas.to_vec();
    ds.sort_by(f64::total_cmp);
    let reference = if ds.contains(&0.1) {
        0.1
    } else {
        ds[ds.len() / 2]
    };
    let mut rep = CheckReport::new(
        CheckId::Flatness,
        json!({ "n": ns, "deltas": ds, "reference_delta": reference }),
    );
    let per_n: Vec<Vec<(f64, f64)>> = ns
        .par_iter()
        .map(|&n| {
            let solver = FiniteSetSolver::new(&segment(n).into_iter().collect())?;
            Ok(ds
                .iter()
                .map(|&d| flatness_profile(&solver, n, d))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut monotone = true;
    for (&n, profile) in ns.iter().zip(&per_n) {
        let u = n as f64 * NUMERIC_FLOOR;
        let mut last = 0.0;
        for (&d, &(even, odd)) in ds.iter().zip(profile) {
            let g = even.max(odd);
            monotone &= g >= last - u;
            last = g;
            rep.rows.push(EvidenceRow::new("g", n, g, u).with_param(d));
            rep.rows
                .push(EvidenceRow::new("g-even", n, even, u).with_param(d));
            rep.rows
                .push(EvidenceRow::new("g-odd", n, odd, u).with_param(d));
        }
    }
    rep.criterion(
        "nondecreasing-in-delta",
        Verdict::from_bool(monotone),
        "g(n, δ) at fixed n",
    );
    let refs: Vec<&EvidenceRow> = rep
        .rows
        .iter()
        .filter(|r| r.quantity == "g" && r.param == Some(reference))
        .collect();
    let (v, detail) = decrease_over(&refs);
    rep.criterion("decreasing-in-n", v, format!("g(n, {reference}): {detail}"));
    let continuum: Vec<Value> = ds
        .iter()
        .map(|&d| json!({"delta": d, "continuum": flatness_continuum(d)}))
        .collect();
    rep.observe("continuum", continuum);
    let parity: Vec<Value> = ns
        .iter()
        .zip(&per_n)
        .map(|(&n, p)| {
            let i = ds.iter().position(|&d| d == reference).unwrap_or(0);
            json!({"n": n, "even": p[i].0, "odd": p[i].1})
        })
        .collect();
    rep.observe("parity", parity);
    Ok(rep.finish())
}

/// Arcsine mass `(2/π)·arcsin δ` of `[−δ, δ]` for the unit interval.
pub fn arcsine_mass(delta: f64) -> f64 {
    2.0 / PI * delta.clamp(-1.0, 1.0).asin()
}

/// `H_{D_n}([−δn, δn] × {0})`.
pub fn segment_mass(solver: &FiniteSetSolver, n: i64, delta: f64) -> f64 {
    let k = (delta * n as f64).floor() as i64;
    (-k..=k).map(|x1| solver.hm(Site::new(x1, 0))).sum()
}

/// Central segment masses converge to the continuum arcsine law.
pub fn check_segment(deltas: &[f64], ns: &[i64]) -> Result<CheckReport> {
    require_sorted(ns, "n values")?;
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
        return Err(Error::Precondition("deltas must lie in (0, 1]".into()));
    }
    let mut ds = deltas.to_vec();
    ds.sort_by(f64::total_cmp);
    let mut rep = CheckReport::new(CheckId::Segment, json!({ "n": ns, "deltas": ds }));
    let masses: Vec<Vec<f64>> = ns
        .par_iter()
        .map(|&n| {
            let solver = FiniteSetSolver::new(&segment(n).into_iter().collect())?;
            Ok(ds.iter().map(|&d| segment_mass(&solver, n, d)).collect())
        })
        .collect::<Result<_>>()?;
    let increasing = masses
        .iter()
        .all(|row| row.windows(2).all(|w| w[1] >= w[0] - NUMERIC_FLOOR));
    rep.criterion(
        "increasing-in-delta",
        Verdict::from_bool(increasing),
        "masses at fixed n",
    );
    let mut limits = Vec::new();
    for (j, &d) in ds.iter().enumerate() {
        let series: Vec<f64> = masses.iter().map(|row| row[j]).collect();
        for (&n, &v) in ns.iter().zip(&series) {
            rep.rows
                .push(EvidenceRow::new("mass", n, v, NUMERIC_FLOOR).with_param(d));
        }
        if d == 1.0 {
            let worst = series.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            rep.criterion(
                "full-mass",
                Verdict::from_bool(worst <= 1e-9),
                format!("max |mass − 1| = {worst:.2e}"),
            );
            continue;
        }
        let oracle = arcsine_mass(d);
        let limit = aitken(&series).unwrap_or(f64::NAN);
        let rel = (limit / oracle - 1.0).abs();
        let cauchy = gaps_decreasing(&series);
        let consistent = limit_consistent(&series, limit);
        let v = if series.len() < 3 {
            Verdict::Inconclusive
        } else {
            Verdict::from_bool(rel <= 0.02 && cauchy)
        };
        rep.criterion(
            &format!("limit-delta-{d}"),
            v,
            format!(
                "Aitken limit {limit:.6} vs arcsine {oracle:.6} (rel {rel:.2e}), gaps {:?}, decreasing {cauchy}, consistent {consistent}",
                gaps(&series)
            ),
        );
        limits.push(json!({"delta": d, "limit": limit, "oracle": oracle, "relative_error": rel}));
    }
    rep.observe("limits", limits);
    Ok(rep.finish())
}

/// `(H_{D_n}(0), P_0(τ_{2n} < τ_{D_n}), P_0(τ_{c₀n} < τ_{D_n}))`.
pub fn escape_bound_terms(n: i64, c0: f64) -> Result<(f64, f64, f64)> {
    let seg = segment(n);
    let h = FiniteSetSolver::new(&seg.iter().copied().collect())?.hm(Site::ORIGIN);
    let escape = |r: i64| -> Result<f64> {
        let w = Window::new(-r, r, -r, r)?;
        Ok(escape_probability(Site::ORIGIN, &seg, &circle(r), w)?.value)
    };
    let big = (c0 * n as f64).round() as i64;
    Ok((h, escape(2 * n)?, escape(big)?))
}

/// `H_{D_n}(0)` is comparable to the escape probabilities to distance `2n` and `c₀n`.
pub fn check_escape_bounds(ns: &[i64], c0: f64) -> Result<CheckReport> {
    require_sorted(ns, "n values")?;
    if c0 <= 2.0 {
        return Err(Error::Precondition(format!("c0 = {c0} must exceed 2")));
    }
    let mut rep = CheckReport::new(CheckId::EscapeBounds, json!({ "n": ns, "c0": c0 }));
    let terms: Vec<(f64, f64, f64)> = ns
        .par_iter()
        .map(|&n| escape_bound_terms(n, c0))
        .collect::<Result<_>>()?;
    let mut near = Vec::new();
    let mut far = Vec::new();
    let mut ordered = true;
    for (&n, &(h, p2, pc)) in ns.iter().zip(&terms) {
        let rn = h / p2;
        let rf = h / pc;
        rep.rows.push(EvidenceRow::new("hm", n, h, NUMERIC_FLOOR));
        rep.rows
            .push(EvidenceRow::new("escape-2n", n, p2, NUMERIC_FLOOR));
        rep.rows
            .push(EvidenceRow::new("escape-c0n", n, pc, NUMERIC_FLOOR));
        rep.rows.push(EvidenceRow::new("ratio-2n", n, rn, 0.0));
        rep.rows.push(EvidenceRow::new("ratio-c0n", n, rf, 0.0));
        near.push((rn, rn));
        far.push((rf, rf));
        ordered &= pc <= p2 + NUMERIC_FLOOR;
    }
    let positive = terms.iter().all(|t| t.0 > 0.0 && t.1 > 0.0 && t.2 > 0.0);
    rep.criterion(
        "positive",
        Verdict::from_bool(positive),
        "all masses and escape probabilities > 0",
    );
    let (v, d) = spread_within(&near, 3.0);
    rep.criterion("ratio-2n-stable", v, d);
    let (v, d) = spread_within(&far, 3.0);
    rep.criterion("ratio-c0n-stable", v, d);
    rep.criterion(
        "escape-ordering",
        Verdict::from_bool(ordered),
        "escaping to c0·n is no more likely than escaping to 2n, so H/P(c0·n) ≥ H/P(2n)",
    );
    Ok(rep.finish())
}

fn growth_of(a: &HalfPlaneSet) -> GrowthCertificate {
    a.growth()
}

/// Hitting probabilities of `x` from the box boundary away from `l_n` vanish faster than `1/n`.
pub fn check_away(a: &HalfPlaneSet, x: Site, ns: &[i64]) -> Result<CheckReport> {
    require_sorted(ns, "n values")?;
    let mut rep = CheckReport::new(
        CheckId::Away,
        json!({ "n": ns, "set": a.spec(), "x": [x.x1, x.x2] }),
    );
    let g = growth_of(a);
    let per_n: Vec<(f64, f64, f64)> = ns
        .par_iter()
        .map(|&n| {
            let solver = truncated_solver(a, n)?;
            let hf = solver.hitting_function(x)?;
            let r = special_regions(n, 1, g)?;
            let vals: Vec<f64> = r.l_n_c.iter().map(|&y| hf.eval(y)).collect();
            let max = vals.iter().copied().fold(0.0, f64::max);
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let bottom = r
                .box_n
                .bottom
                .iter()
                .filter(|&&y| y != x)
                .map(|&y| hf.eval(y).abs())
                .fold(0.0, f64::max);
            Ok((max, min, bottom))
        })
        .collect::<Result<_>>()?;
    for (&n, &(max, _, _)) in ns.iter().zip(&per_n) {
        rep.rows.push(EvidenceRow::new(
            "n-max",
            n,
            n as f64 * max,
            n as f64 * NUMERIC_FLOOR,
        ));
    }
    let nonneg = per_n.iter().all(|p| p.1 >= -NUMERIC_FLOOR);
    rep.criterion(
        "nonnegative",
        Verdict::from_bool(nonneg),
        "every probed value ≥ −1e-10",
    );
    let bottom = per_n.iter().all(|p| p.2 == 0.0);
    rep.criterion(
        "bottom-edge-zero",
        Verdict::from_bool(bottom),
        "starts on the bottom edge are already absorbed",
    );
    let (v, d) = decrease_over(&rep.series("n-max"));
    rep.criterion("decreasing", v, d);
    Ok(rep.finish())
}

/// Sums of hitting probabilities of `x` from `l_n` approach the stationary measure.
pub fn check_line_decomposition(a: &HalfPlaneSet, x: Site, ns: &[i64]) -> Result<CheckReport> {
    require_sorted(ns, "n values")?;
    let g = growth_of(a);
    let top = *ns.last().expect("nonempty");
    let m = box_height(top, g).max(a.max_height(top) + 1);
    let reference = stationary_hm(a, x, m, Method::VisitsGreen, None)?;
    let mut rep = CheckReport::new(
        CheckId::LineDecomposition,
        json!({ "n": ns, "set": a.spec(), "x": [x.x1, x.x2], "reference_m": m }),
    );
    rep.observe("reference", &reference);
    let per_n: Vec<(f64, f64, f64)> = ns
        .par_iter()
        .map(|&n| {
            let solver = truncated_solver(a, n)?;
            let hf = solver.hitting_function(x)?;
            let r = special_regions(n, 1, g)?;
            let partial: f64 = r.l_n.iter().map(|&y| hf.eval(y)).sum();
            let full: f64 = r.box_n.up.iter().map(|&y| hf.eval(y)).sum();
            let w = Site::new(0, 1);
            let l0 = truncated_solver(&HalfPlaneSet::l0(), n)?;
            let row = l0.green_from(w);
            let edge: f64 = r.l_n.iter().map(|&y| row.eval(y) / 4.0).sum();
            Ok((partial, full, edge))
        })
        .collect::<Result<_>>()?;
    let ru = reference.uncertainty();
    for (&n, &(partial, full, edge)) in ns.iter().zip(&per_n) {
        let u = NUMERIC_FLOOR * 4.0 * n as f64;
        rep.rows
            .push(EvidenceRow::new("partial-sum", n, partial, u));
        rep.rows.push(EvidenceRow::new("up-edge-sum", n, full, u));
        rep.rows.push(EvidenceRow::new(
            "gap",
            n,
            (partial - reference.value).abs(),
            u + ru,
        ));
        rep.rows
            .push(EvidenceRow::new("edge-l0-gap", n, (edge - 1.0).abs(), u));
    }
    let (v, d) = decrease_over(&rep.series("gap"));
    rep.criterion("gap-decreasing", v, d);
    let (v, d) = decrease_over(&rep.series("edge-l0-gap"));
    rep.criterion(
        "edge-l0-gap-decreasing",
        v,
        format!("L0 at the origin, arrivals from above: {d}"),
    );
    let sub = per_n.iter().all(|p| p.0 <= p.1 + NUMERIC_FLOOR);
    rep.criterion(
        "partial-below-full",
        Verdict::from_bool(sub),
        "l_n sums ≤ sums over the whole up edge",
    );
    Ok(rep.finish())
}

/// Harmonic measure of `Box(n)` on `l_n` matches half of `H_{D_n}(0)` on scale `1/n`.
pub fn check_box_coupling(ns: &[i64]) -> Result<CheckReport> {
    require_sorted(ns, "n values")?;
    let g = GrowthCertificate::default();
    let mut rep = CheckReport::new(CheckId::BoxCoupling, json!({ "n": ns, "alpha": g.alpha }));
    let per_n: Vec<(f64, f64, f64)> = ns
        .par_iter()
        .map(|&n| {
            let h0 = FiniteSetSolver::new(&segment(n).into_iter().collect())?.hm(Site::ORIGIN);
            let r = special_regions(n, 1, g)?;
            let b = FiniteSetSolver::new(&r.box_n.sites())?;
            let dev = r
                .l_n
                .iter()
                .map(|&y| (2.0 * b.hm(y) - h0).abs())
                .fold(0.0, f64::max);
            let asym = r
                .l_n
                .iter()
                .map(|&y| (b.hm(y) - b.hm(y.mirror())).abs())
                .fold(0.0, f64::max);
            let total: f64 = r.box_n.sites().iter().map(|&s| b.hm(s)).sum();
            Ok((n as f64 * dev, asym, total))
        })
        .collect::<Result<_>>()?;
    for (&n, &(dev, _, _)) in ns.iter().zip(&per_n) {
        rep.rows.push(EvidenceRow::new(
            "n-deviation",
            n,
            dev,
            3.0 * n as f64 * NUMERIC_FLOOR,
        ));
    }
    let (v, d) = decrease_over(&rep.series("n-deviation"));
    rep.criterion("decreasing", v, d);
    let sym = per_n.iter().map(|p| p.1).fold(0.0, f64::max);
    rep.criterion(
        "mirror-symmetric",
        Verdict::from_bool(sym <= NUMERIC_FLOOR),
        format!("max asymmetry {sym:.2e}"),
    );
    let mass = per_n.iter().map(|p| (p.2 - 1.0).abs()).fold(0.0, f64::max);
    rep.criterion(
        "unit-mass",
        Verdict::from_bool(mass <= 1e-9),
        format!("max |total − 1| = {mass:.2e}"),
    );
    Ok(rep.finish())
}

/// Depth `⌊k·n^{α₁}⌋` of the half box.
pub fn halfbox_depth(n: i64, factor: f64, g: GrowthCertificate) -> i64 {
    (factor * (n as f64).powf(g.alpha1())).floor() as i64
}

/// `H_{D_n}(0) − 2·H_{Box̂(m,n)}(0)` is nonnegative and `o(1/n)`.
pub fn check_halfbox(ns: &[i64], factor: f64) -> Result<CheckReport> {
    require_sorted(ns, "n values")?;
    let g = GrowthCertificate::default();
    let mut rep = CheckReport::new(
        CheckId::Halfbox,
        json!({ "n": ns, "m_factor": factor, "alpha": g.alpha }),
    );
    let per_n: Vec<(i64, f64)> = ns
        .par_iter()
        .map(|&n| {
            let m = halfbox_depth(n, factor, g);
            let hb = half_box(m, n)?;
            let h0 = FiniteSetSolver::new(&segment(n).into_iter().collect())?.hm(Site::ORIGIN);
            let hh = FiniteSetSolver::new(&hb.sites())?.hm(Site::ORIGIN);
            Ok((m, h0 - 2.0 * hh))
        })
        .collect::<Result<_>>()?;
    for (&n, &(m, diff)) in ns.iter().zip(&per_n) {
        rep.rows
            .push(EvidenceRow::new("difference", n, diff, 3.0 * NUMERIC_FLOOR));
        rep.rows.push(EvidenceRow::new(
            "n-difference",
            n,
            n as f64 * diff,
            3.0 * n as f64 * NUMERIC_FLOOR,
        ));
        rep.rows.push(EvidenceRow::new("depth", n, m as f64, 0.0));
    }
    let worst = per_n.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    rep.criterion(
        "nonnegative",
        Verdict::from_bool(worst >= -1e-9),
        format!("smallest difference {worst:.3e}"),
    );
    let (v, d) = decrease_over(&rep.series("n-difference"));
    rep.criterion("decreasing", v, d);
    Ok(rep.finish())
}

/// Window size `n(m) = ⌊m^{3/(2α) − 1/2}⌋` paired with the line height `m`.
pub fn schedule_n(m: i64, alpha: f64) -> i64 {
    floor_pow(m as f64, 1.5 / alpha - 0.5)
}

/// Truncated line sums at height `m` and in-harmonic values at height `n(m)` close in on each other.
pub fn check_schedule(a: &HalfPlaneSet, x: Site, ms: &[i64]) -> Result<CheckReport> {
    require_sorted(ms, "m values")?;
    let alpha = a.growth().alpha;
    let mut rep = CheckReport::new(
        CheckId::Schedule,
        json!({ "m": ms, "set": a.spec(), "x": [x.x1, x.x2], "alpha": alpha }),
    );
    let bound = stationary_hm(a, x, ms[0], Method::VisitsGreen, None)?;
    let per_m: Vec<(i64, f64, f64, f64)> = ms
        .par_iter()
        .map(|&m| {
            let n = schedule_n(m, alpha);
            let line = stationary_hm(a, x, m, Method::LineSum, None)?;
            let inh = inharmonic(a, n, x)?;
            Ok((n, line.value, inh.value, inh.uncertainty()))
        })
        .collect::<Result<_>>()?;
    let top = bound.bracket.hi + NUMERIC_FLOOR;
    let (mut line_in, mut inh_in) = (true, true);
    for (&m, &(n, line, inh, u)) in ms.iter().zip(&per_m) {
        rep.rows
            .push(EvidenceRow::new("line-sum", m, line, NUMERIC_FLOOR));
        rep.rows
            .push(EvidenceRow::new("inharmonic", m, inh, u + NUMERIC_FLOOR));
        rep.rows.push(EvidenceRow::new(
            "gap",
            m,
            (inh - line).abs(),
            u + 2.0 * NUMERIC_FLOOR,
        ));
        rep.rows.push(EvidenceRow::new("n", m, n as f64, 0.0));
        line_in &= (-NUMERIC_FLOOR..=top).contains(&line);
        inh_in &= inh + u >= -NUMERIC_FLOOR && inh - u <= top;
    }
    rep.observe("stationary_bound", &bound);
    let (v, d) = decrease_over(&rep.series("gap"));
    rep.criterion("gap-decreasing", v, d);
    let inh_max = per_m.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    rep.criterion(
        "line-sum-within-bound",
        Verdict::from_bool(line_in),
        format!("line sums in [0, {:.9}]", bound.bracket.hi),
    );
    rep.criterion(
        "inharmonic-within-bound",
        Verdict::from_bool(inh_in),
        format!(
            "in-harmonic values up to {inh_max:.9} against [0, {:.9}]",
            bound.bracket.hi
        ),
    );
    if a.decoration().is_empty() && a.is_finite_decoration() {
        let last = per_m.last().expect("nonempty");
        let err = (last.2 - 1.0).abs();
        let tol = 1.0 / last.0 as f64;
        rep.criterion(
            "l0-limit-one",
            Verdict::from_bool(err <= tol),
            format!("|H̃ − 1| = {err:.3e} at n = {}", last.0),
        );
    }
    Ok(rep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn strict_decrease_needs_separation_and_three_points() {
        assert_eq!(
            strict_decrease(&[(3.0, 0.1), (2.0, 0.1), (1.0, 0.1)]).0,
            Verdict::Pass
        );
        assert_eq!(
            strict_decrease(&[(3.0, 0.1), (4.0, 0.1), (1.0, 0.1)]).0,
            Verdict::Pass
        );
        assert_eq!(
            strict_decrease(&[(1.0, 0.1), (2.0, 0.1), (3.0, 0.1)]).0,
            Verdict::Fail
        );
        assert_eq!(
            strict_decrease(&[(1.0, 0.6), (0.9, 0.6), (0.5, 0.6)]).0,
            Verdict::Inconclusive
        );
        assert_eq!(
            strict_decrease(&[(3.0, 0.0), (1.0, 0.0)]).0,
            Verdict::Inconclusive
        );
        assert!(strict_decrease(&[(3.0, 0.1), (4.0, 0.1), (1.0, 0.1)])
            .1
            .contains("1 intermediate"));
    }

    #[test]
    fn verdicts_combine_worst_first() {
        use Verdict::*;
        assert_eq!(Verdict::all([Pass, Pass]), Pass);
        assert_eq!(Verdict::all([Pass, Inconclusive]), Inconclusive);
        assert_eq!(Verdict::all([Inconclusive, Fail, Pass]), Fail);
        assert_eq!(Verdict::all([]), Inconclusive);
        assert_eq!(
            (Pass.exit_code(), Fail.exit_code(), Inconclusive.exit_code()),
            (0, 1, 2)
        );
        assert_eq!(spread_within(&[(1.0, 1.0), (2.0, 2.0)], 3.0).0, Pass);
        assert_eq!(spread_within(&[(1.0, 1.0), (5.0, 5.0)], 3.0).0, Fail);
        assert_eq!(
            spread_within(&[(1.0, 2.0), (2.5, 4.0)], 3.0).0,
            Inconclusive
        );
    }

    #[test]
    fn check_ids_round_trip() {
        for id in CheckId::ALL {
            assert_eq!(id.name().parse::<CheckId>().unwrap(), id);
            assert_eq!(serde_json::to_value(id).unwrap(), json!(id.name()));
        }
        assert!("bogus".parse::<CheckId>().is_err());
    }

    #[test]
    fn float_exit_law_matches_rational_oracle() {
        for n in 2..=6 {
            let exact = rational_exit(n, Site::ORIGIN).unwrap();
            let (up, left, right) = reflection_float(n).unwrap();
            for (name, v) in [("up", up), ("left", left), ("right", right)] {
                let q = exact.class(name).to_f64().unwrap();
                assert!((q - v).abs() < 1e-10, "n={n} {name}: {q} vs {v}");
            }
        }
    }

    #[test]
    fn reflection_passes_on_small_boxes() {
        let r = check_reflection(&[2, 3, 8, 16]).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.criterion_verdict("symmetry-n3"), Some(Verdict::Pass));
        assert!(r.series("margin").iter().all(|row| row.value > 0.0));
    }

    #[test]
    fn tail_escape_scales_like_gamblers_ruin() {
        let r = check_tail_escape(&[2, 3, 4], 0.5).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.criteria);
        for row in r.series("scaled") {
            assert!(row.lo > 0.2 && row.hi < 0.26, "{row:?}");
        }
    }

    #[test]
    fn flatness_profile_tends_to_the_continuum_value() {
        let r = check_flatness(&[8, 16, 32, 64], &[0.1, 0.25]).unwrap();
        assert_eq!(
            r.criterion_verdict("nondecreasing-in-delta"),
            Some(Verdict::Pass)
        );
        let g: Vec<f64> = r
            .rows
            .iter()
            .filter(|row| row.quantity == "g" && row.param == Some(0.25))
            .map(|row| row.value)
            .collect();
        let target = flatness_continuum(0.25);
        assert!((g[3] / target - 1.0).abs() < 0.1, "{g:?} vs {target}");
        assert!((g[3] - target).abs() < (g[0] - target).abs());
    }

    #[test]
    fn segment_masses_follow_the_arcsine_law() {
        // Independent midpoint quadrature of the arcsine density 1/(π√(1−t²)).
        let quad = |d: f64| {
            let k = 200_000;
            let h = 2.0 * d / k as f64;
            (0..k)
                .map(|i| {
                    let t = -d + (i as f64 + 0.5) * h;
                    h / (PI * (1.0 - t * t).sqrt())
                })
                .sum::<f64>()
        };
        assert!((quad(0.5) - 1.0 / 3.0).abs() < 1e-9);
        assert!((quad(0.5) - arcsine_mass(0.5)).abs() < 1e-9);
        let r = check_segment(&[0.5, 1.0], &[16, 32, 64, 128]).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.criteria);
    }

    #[test]
    fn escape_ratios_on_small_segments() {
        let r = check_escape_bounds(&[4, 8, 16], 4.0).unwrap();
        assert_eq!(r.criterion_verdict("positive"), Some(Verdict::Pass));
        assert_eq!(r.criterion_verdict("escape-ordering"), Some(Verdict::Pass));
        assert!(check_escape_bounds(&[4, 8], 2.0).is_err());
    }

    #[test]
    fn schedule_and_depth_rules() {
        assert_eq!([4, 6, 8].map(|m| schedule_n(m, 0.5)), [32, 88, 181]);
        let g = GrowthCertificate::default();
        assert_eq!(halfbox_depth(32, 2.0, g), 26);
        assert_eq!(halfbox_depth(16, 2.0, g), 16);
    }

    #[test]
    fn shrinking_gap_checks_on_small_scales() {
        let a = HalfPlaneSet::with_sites([Site::new(0, 1)]).unwrap();
        let x = Site::new(0, 1);
        for r in [
            check_away(&a, x, &[16, 32, 64]).unwrap(),
            check_line_decomposition(&a, x, &[16, 32, 64]).unwrap(),
            check_box_coupling(&[16, 32, 64]).unwrap(),
            check_halfbox(&[16, 32, 64], 2.0).unwrap(),
        ] {
            assert_eq!(r.verdict, Verdict::Pass, "{}: {:?}", r.id, r.criteria);
        }
    }

    #[test]
    fn schedule_on_the_line_reaches_one() {
        let r = check_schedule(&HalfPlaneSet::l0(), Site::ORIGIN, &[2, 3, 4]).unwrap();
        assert_eq!(r.criterion_verdict("l0-limit-one"), Some(Verdict::Pass));
        assert_eq!(r.criterion_verdict("gap-decreasing"), Some(Verdict::Pass));
        assert_eq!(
            r.criterion_verdict("line-sum-within-bound"),
            Some(Verdict::Pass)
        );
    }

    #[test]
    fn params_reject_sites_outside_the_set() {
        let p = CheckParams {
            x: Some([5, 5]),
            ..Default::default()
        };
        assert!(run_check(CheckId::Away, &p).is_err());
        assert!(check_reflection(&[4, 2]).is_err());
    }
}
