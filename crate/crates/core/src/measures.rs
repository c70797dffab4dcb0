//! Stationary, in-harmonic and truncated harmonic measures of half-plane sets,
//! each available through more than one computational route.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;
use serde_json::{json, Value};

use crate::dirichlet::Bracket;
use crate::error::{Error, Result};
use crate::extrapolate::{self, Extrapolation};
use crate::halfplane::HalfPlaneSolver;
use crate::lattice::{ceil_pow, segment, truncate, HalfPlaneSet, Site, SiteSet};
use crate::montecarlo::{circle, mc_hm_from_circle, RngSpec};
use crate::potential::FiniteSetSolver;

/// Decoration budget used when a profile set has to be cut off.
pub const PROFILE_SITE_BUDGET: usize = 2500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LineSum,
    VisitsGreen,
    Inharmonic,
    Equilibrium,
    McCircle,
    DirectedSolve,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::LineSum => "line-sum",
            Method::VisitsGreen => "visits-green",
            Method::Inharmonic => "inharmonic",
            Method::Equilibrium => "equilibrium",
            Method::McCircle => "mc-circle",
            Method::DirectedSolve => "directed-solve",
        }
    }
}

/// A computed measure with its uncertainty and provenance.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureValue {
    pub value: f64,
    pub bracket: Bracket,
    pub std_error: Option<f64>,
    pub method: Method,
    pub params: BTreeMap<String, Value>,
}

impl MeasureValue {
    pub fn exact(value: f64, method: Method) -> Self {
        Self::bracketed(Bracket::point(value), method)
    }

    pub fn bracketed(bracket: Bracket, method: Method) -> Self {
        MeasureValue {
            value: bracket.value,
            bracket,
            std_error: None,
            method,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), v.into());
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.value *= k;
        self.bracket = self.bracket.scale(k);
        self.std_error = self.std_error.map(|s| s * k.abs());
        self
    }

    /// Half-width used when comparing two values: bracket or three standard errors.
    pub fn uncertainty(&self) -> f64 {
        let b = (self.bracket.hi - self.value).max(self.value - self.bracket.lo);
        b.max(3.0 * self.std_error.unwrap_or(0.0))
    }
}

fn site_json(s: Site) -> Value {
    json!([s.x1, s.x2])
}

/// Absorbing decoration of `a` near `x`: everything for finite decorations,
/// otherwise the profile within `reach` (shrunk to fit the site budget).
fn decoration(a: &HalfPlaneSet, reach: i64) -> (Vec<Site>, i64) {
    if a.is_finite_decoration() {
        let sites = a.decoration().to_vec();
        let r = sites.iter().map(|s| s.x1.abs()).max().unwrap_or(0);
        return (sites, r);
    }
    let mut r = reach.max(1);
    loop {
        let sites = a.sites_above_l0(r);
        if sites.len() <= PROFILE_SITE_BUDGET || r <= 1 {
            return (sites, r);
        }
        r = r * 3 / 4;
    }
}

fn require_member(a: &HalfPlaneSet, x: Site) -> Result<()> {
    if !a.contains(x) {
        return Err(Error::Precondition(format!("{x} is not in A ∪ L0")));
    }
    Ok(())
}

/// Default line-sum half-width `⌈m^{1/α₁}⌉`.
pub fn default_line_width(a: &HalfPlaneSet, m: i64) -> i64 {
    ceil_pow(m as f64, 1.0 / a.growth().alpha1())
}

/// `H̄_{A,m}(x)`, the stationary measure of `x ∈ A` seen from `L_m`.
///
/// `VisitsGreen` evaluates the expected number of visits to `L_m ∖ A` of the
/// walk kicked from `x` in closed form; `LineSum` adds the hitting
/// probabilities from `L_m` over `|y₁ − x₁| ≤ W` and brackets the tail.
pub fn stationary_hm(
    a: &HalfPlaneSet,
    x: Site,
    m: i64,
    method: Method,
    w: Option<i64>,
) -> Result<MeasureValue> {
    require_member(a, x)?;
    let w_min = default_line_width(a, m);
    let w = w.unwrap_or(w_min);
    if w < w_min {
        return Err(Error::Precondition(format!(
            "line half-width {w} below ⌈m^(1/α1)⌉ = {w_min}"
        )));
    }
    let local = a.max_height(x.x1.abs() + w);
    if m <= local {
        return Err(Error::Precondition(format!(
            "line height m={m} does not clear the set (height {local} near {x})"
        )));
    }
    let reach = x.x1.abs() + 2 * w;
    let (deco, used) = decoration(a, reach);
    let solver = HalfPlaneSolver::new(&deco)?;
    let base = |v: MeasureValue| {
        v.with("m", m)
            .with("W", w)
            .with("reach", used)
            .with("x", site_json(x))
    };
    match method {
        Method::VisitsGreen => {
            let v = solver.stationary(x, m)?;
            if a.is_finite_decoration() {
                return Ok(base(MeasureValue::exact(v, method)));
            }
            let (inner, _) = decoration(a, (used / 2).max(1));
            let v_inner = HalfPlaneSolver::new(&inner)?.stationary(x, m)?;
            let spread = (v_inner - v).abs();
            Ok(base(MeasureValue::bracketed(
                Bracket::new(v - spread, v, v + spread),
                method,
            )))
        }
        Method::LineSum => {
            let v = solver.line_sum(x, m, w)?;
            let spread = deco
                .iter()
                .filter(|k| (k.x1 - x.x1).abs() <= w)
                .map(|k| (k.x1 - x.x1).abs())
                .max()
                .unwrap_or(0)
                .min(w / 2);
            let t = 2.0 / PI * (m as f64 / (w - spread) as f64 + 0.5).atan();
            let tail = 2.0 * v * t / (1.0 - t);
            Ok(base(MeasureValue::bracketed(
                Bracket::new(v, v, v + tail),
                method,
            ))
            .with("tail_allowance", tail))
        }
        other => Err(Error::Precondition(format!(
            "{} is not a stationary-measure method",
            other.tag()
        ))),
    }
}

/// Stationary measure of one incoming edge `w → x`, `x ∈ A ∪ L₀`, `w ∉ A`.
pub fn stationary_edge(a: &HalfPlaneSet, x: Site, w: Site, m: i64) -> Result<MeasureValue> {
    require_member(a, x)?;
    let reach = x.x1.abs() + 2 * default_line_width(a, m);
    let (deco, used) = decoration(a, reach);
    let v = HalfPlaneSolver::new(&deco)?.stationary_edge(x, w, m)?;
    Ok(MeasureValue::exact(v, Method::VisitsGreen)
        .with("m", m)
        .with("reach", used)
        .with("x", site_json(x))
        .with("prev", site_json(w)))
}

/// `Ĥ_{A,m}(y)` for `y ∉ A`: stationary mass of all edges from `y` into `A ∪ L₀`.
pub fn stationary_hm_outer(a: &HalfPlaneSet, y: Site, m: i64) -> Result<MeasureValue> {
    if a.contains(y) || y.x2 < 1 {
        return Err(Error::Precondition(format!(
            "{y} must lie above L0 outside A"
        )));
    }
    let reach = y.x1.abs() + 2 * default_line_width(a, m);
    let (deco, used) = decoration(a, reach);
    let solver = HalfPlaneSolver::new(&deco)?;
    let mut total = 0.0;
    let mut edges = Vec::new();
    for x in y.neighbors() {
        if a.contains(x) {
            let e = solver.stationary_edge(x, y, m)?;
            edges.push(json!({"x": site_json(x), "value": e}));
            total += e;
        }
    }
    Ok(MeasureValue::exact(total, Method::VisitsGreen)
        .with("m", m)
        .with("reach", used)
        .with("y", site_json(y))
        .with("edges", Value::Array(edges)))
}

/// `H̃_{A,n}(x) = πn · P_{(0,n)}(S_τ̄ = x)` for the walk absorbed on `A ∪ L₀`.
pub fn inharmonic(a: &HalfPlaneSet, n: i64, x: Site) -> Result<MeasureValue> {
    require_member(a, x)?;
    let start = Site::new(0, n);
    if a.contains(start) {
        return Err(Error::Precondition(format!("start {start} lies in A")));
    }
    let scale = PI * n as f64;
    let (deco, used) = decoration(a, 4 * n);
    let v = HalfPlaneSolver::new(&deco)?.hit(start, x)? * scale;
    let mv = if a.is_finite_decoration() {
        MeasureValue::exact(v, Method::Inharmonic)
    } else {
        let (inner, _) = decoration(a, (used / 2).max(1));
        let v_inner = HalfPlaneSolver::new(&inner)?.hit(start, x)? * scale;
        let s = (v_inner - v).abs();
        MeasureValue::bracketed(Bracket::new(v - s, v, v + s), Method::Inharmonic)
    };
    Ok(mv.with("n", n).with("reach", used).with("x", site_json(x)))
}

/// Equilibrium solver for the truncation `A_n`.
pub fn truncated_solver(a: &HalfPlaneSet, n: i64) -> Result<FiniteSetSolver> {
    FiniteSetSolver::new(&truncate(a, n)?.to_set())
}

/// `H_{A_n}(x)`, harmonic measure from infinity of the truncation.
pub fn truncated_hm(a: &HalfPlaneSet, n: i64, x: Site) -> Result<MeasureValue> {
    let solver = truncated_solver(a, n)?;
    if !solver.set().contains(&x) {
        return Err(Error::Precondition(format!("{x} is not in A_{n}")));
    }
    let eq = solver.equilibrium();
    Ok(MeasureValue::exact(solver.hm(x), Method::Equilibrium)
        .with("n", n)
        .with("x", site_json(x))
        .with("robin", eq.robin)
        .with("skin", solver.skin().len()))
}

/// Monte Carlo `H_{A_n}(x)` from walks started on the circle of radius `r`.
pub fn truncated_hm_mc(
    a: &HalfPlaneSet,
    n: i64,
    x: Site,
    r: i64,
    samples: u64,
    spec: RngSpec,
) -> Result<MeasureValue> {
    let set: SiteSet = truncate(a, n)?.to_set();
    let e = mc_hm_from_circle(&set, r, x, samples, None, spec);
    Ok(mc_value(e.site.mean, e.site.std_error)
        .with("n", n)
        .with("R", r)
        .with("samples", samples)
        .with("timeout_fraction", e.site.timeout_fraction)
        .with("x", site_json(x)))
}

fn mc_value(mean: f64, se: f64) -> MeasureValue {
    let mut v = MeasureValue::bracketed(
        Bracket::new(mean - 3.0 * se, mean, mean + 3.0 * se),
        Method::McCircle,
    );
    v.std_error = Some(se);
    v
}

/// Harmonic measure from infinity of `A_n` at `x ∈ L₀` restricted to arrivals
/// from `x + (0,1)`. The value is the far-field limit `F(x + e₂)/4`; the
/// bracket also covers the exact values from every start on the circle of
/// radius `r`.
pub fn edge_hm_l0(a: &HalfPlaneSet, n: i64, x: Site, r: i64) -> Result<MeasureValue> {
    if x.x2 != 0 || x.x1.abs() > n {
        return Err(Error::Precondition(format!("{x} is not in D_{n}")));
    }
    let solver = truncated_solver(a, n)?;
    edge_from_solver(&solver, n, x, r)
}

pub(crate) fn edge_from_solver(
    solver: &FiniteSetSolver,
    n: i64,
    x: Site,
    r: i64,
) -> Result<MeasureValue> {
    let w = x + Site::new(0, 1);
    let lim = solver.edge_from_infinity(x, w)?;
    let starts = circle(r);
    let step = (starts.len() / 256).max(1);
    let sample: Vec<Site> = starts.iter().step_by(step).copied().collect();
    let (mean, lo, hi) = solver.edge_from_starts(x, w, &sample)?;
    Ok(MeasureValue::bracketed(
        Bracket::new(lo.min(lim), lim, hi.max(lim)),
        Method::DirectedSolve,
    )
    .with("n", n)
    .with("R", r)
    .with("circle_mean", mean)
    .with("x", site_json(x)))
}

/// Edge measure from above by walks from the circle with previous-site tally.
pub fn edge_hm_l0_mc(
    a: &HalfPlaneSet,
    n: i64,
    x: Site,
    r: i64,
    samples: u64,
    spec: RngSpec,
) -> Result<MeasureValue> {
    let set: SiteSet = truncate(a, n)?.to_set();
    let e = mc_hm_from_circle(&set, r, x, samples, None, spec);
    let above = x + Site::new(0, 1);
    let est = e
        .edges
        .iter()
        .find(|(p, _)| *p == above)
        .map(|(_, est)| *est)
        .expect("circle estimate lists all four neighbours");
    Ok(mc_value(est.mean, est.std_error)
        .with("n", n)
        .with("R", r)
        .with("samples", samples)
        .with("timeout_fraction", est.timeout_fraction)
        .with("x", site_json(x)))
}

/// Indexed values with extrapolated limit and gap diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceSeries {
    pub ns: Vec<i64>,
    pub values: Vec<MeasureValue>,
    pub limit: Option<f64>,
    pub method: &'static str,
    /// Absolute successive differences.
    pub gaps: Vec<f64>,
    /// Largest successive gap among the last three values.
    pub cauchy_gap: f64,
    pub gaps_decreasing: bool,
    pub limit_consistent: bool,
}

impl ConvergenceSeries {
    pub fn new(ns: Vec<i64>, values: Vec<MeasureValue>, how: Extrapolation) -> Result<Self> {
        if ns.len() != values.len() || ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition(
                "series indices must increase strictly".into(),
            ));
        }
        let v: Vec<f64> = values.iter().map(|m| m.value).collect();
        let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let limit = how.apply(&nf, &v);
        let gaps = extrapolate::gaps(&v);
        let cauchy_gap = gaps.iter().rev().take(2).copied().fold(0.0, f64::max);
        Ok(ConvergenceSeries {
            gaps_decreasing: extrapolate::gaps_decreasing(&v),
            limit_consistent: limit.is_some_and(|l| extrapolate::limit_consistent(&v, l)),
            ns,
            values,
            limit,
            method: how.tag(),
            gaps,
            cauchy_gap,
        })
    }

    pub fn raw(&self) -> Vec<f64> {
        self.values.iter().map(|m| m.value).collect()
    }
}

/// `c = lim n·H_{D_n}(0)` and `C = 2/c`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingConstants {
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub series: ConvergenceSeries,
    pub liminf_bound: f64,
    pub limsup_bound: f64,
}

impl ScalingConstants {
    /// Constants for a known `c` (no provenance series).
    pub fn from_c(c: f64) -> Self {
        ScalingConstants {
            c,
            big_c: 2.0 / c,
            series: ConvergenceSeries::new(vec![], vec![], Extrapolation::Last)
                .expect("empty series"),
            liminf_bound: c,
            limsup_bound: c,
        }
    }
}

/// `n·H_{D_n}(0)` by the equilibrium system.
pub fn scaled_center_mass(n: i64) -> Result<MeasureValue> {
    let set: SiteSet = segment(n).into_iter().collect();
    let solver = FiniteSetSolver::new(&set)?;
    Ok(MeasureValue::exact(n as f64 * solver.hm(Site::ORIGIN), Method::Equilibrium).with("n", n))
}

pub fn constant_c(ns: &[i64]) -> Result<ScalingConstants> {
    if ns.len() < 4 {
        return Err(Error::Precondition(
            "constant c needs at least four values of n".into(),
        ));
    }
    let values = ns
        .iter()
        .map(|&n| scaled_center_mass(n))
        .collect::<Result<Vec<_>>>()?;
    let series = ConvergenceSeries::new(ns.to_vec(), values, Extrapolation::Aitken)?;
    let raw = series.raw();
    let c = series.limit.expect("at least three values");
    let tail = &raw[raw.len() - 3..];
    Ok(ScalingConstants {
        c,
        big_c: 2.0 / c,
        liminf_bound: tail.iter().copied().fold(f64::INFINITY, f64::min).min(c),
        limsup_bound: tail
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(c),
        series,
    })
}

/// `C·n·H_{A_n}(x)` over `ns` against the stationary reference `H̄_A(x)`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub x: Site,
    pub edge_version: bool,
    pub reference: MeasureValue,
    pub series: ConvergenceSeries,
    pub relative_gaps: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// For `x ∈ A ∖ L₀` the site measure is used; for `x ∈ L₀` the measure of
/// arrivals from `x + (0,1)`, compared with the stationary edge measure.
pub fn scaling_limit_report(
    a: &HalfPlaneSet,
    x: Site,
    ns: &[i64],
    constants: &ScalingConstants,
    tolerance: f64,
) -> Result<ScalingReport> {
    require_member(a, x)?;
    let edge_version = x.x2 == 0;
    let m = a.max_height(x.x1.abs() + 8) + 2;
    let reference = if edge_version {
        stationary_edge(a, x, x + Site::new(0, 1), m)?
    } else {
        stationary_hm(a, x, m, Method::VisitsGreen, None)?
    };
    let mut values = Vec::with_capacity(ns.len());
    for &n in ns {
        let v = if edge_version {
            edge_hm_l0(a, n, x, 4 * n)?
        } else {
            truncated_hm(a, n, x)?
        };
        values.push(v.scaled(constants.big_c * n as f64).with("n", n));
    }
    let series = ConvergenceSeries::new(ns.to_vec(), values, Extrapolation::Aitken)?;
    let relative_gaps: Vec<f64> = series
        .raw()
        .iter()
        .map(|v| (v / reference.value - 1.0).abs())
        .collect();
    let pass = relative_gaps.len() >= 2
        && relative_gaps.last() < relative_gaps.first()
        && *relative_gaps.last().unwrap() <= tolerance;
    Ok(ScalingReport {
        x,
        edge_version,
        reference,
        series,
        relative_gaps,
        tolerance,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_is_one_by_both_stationary_routes() {
        let l0 = HalfPlaneSet::l0();
        for m in [4, 8] {
            let v = stationary_hm(&l0, Site::ORIGIN, m, Method::VisitsGreen, None).unwrap();
            assert!((v.value - 1.0).abs() < 1e-6);
        }
        let ls = stationary_hm(&l0, Site::ORIGIN, 4, Method::LineSum, Some(400)).unwrap();
        assert!(ls.bracket.lo <= 1.0 && ls.bracket.hi >= 1.0, "{ls:?}");
    }

    #[test]
    fn finite_decoration_is_stationary_in_m() {
        let a = HalfPlaneSet::with_sites([Site::new(0, 1)]).unwrap();
        let x = Site::new(0, 1);
        let v4 = stationary_hm(&a, x, 4, Method::VisitsGreen, None).unwrap();
        let v16 = stationary_hm(&a, x, 16, Method::VisitsGreen, None).unwrap();
        assert!((v4.value - v16.value).abs() < 1e-12);
        assert!(stationary_hm(&a, x, 1, Method::VisitsGreen, None).is_err());
        assert!(stationary_hm(&a, Site::new(0, 2), 4, Method::VisitsGreen, None).is_err());
    }

    #[test]
    fn outer_measure_of_the_line() {
        let l0 = HalfPlaneSet::l0();
        let a = stationary_hm_outer(&l0, Site::new(3, 1), 5).unwrap().value;
        let b = stationary_hm_outer(&l0, Site::new(-11, 1), 5)
            .unwrap()
            .value;
        assert!((a - b).abs() < 1e-8 && (a - 1.0).abs() < 1e-12);
        assert_eq!(
            stationary_hm_outer(&l0, Site::new(0, 4), 5).unwrap().value,
            0.0
        );
    }

    #[test]
    fn inharmonic_approaches_one_on_the_line() {
        let l0 = HalfPlaneSet::l0();
        let mut last = f64::INFINITY;
        for n in [25, 50, 100] {
            let gap = (inharmonic(&l0, n, Site::ORIGIN).unwrap().value - 1.0).abs();
            assert!(gap < last);
            last = gap;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn truncated_measure_is_a_probability() {
        let l0 = HalfPlaneSet::l0();
        let solver = truncated_solver(&l0, 12).unwrap();
        let total: f64 = segment(12).iter().map(|&s| solver.hm(s)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let e = edge_hm_l0(&l0, 12, Site::ORIGIN, 48).unwrap();
        assert!((2.0 * e.value - solver.hm(Site::ORIGIN)).abs() < 1e-12);
        let end = edge_hm_l0(&l0, 12, Site::new(12, 0), 48).unwrap();
        assert!(end.value < solver.hm(Site::new(12, 0)));
    }

    #[test]
    fn series_requires_increasing_indices() {
        let v = MeasureValue::exact(1.0, Method::Equilibrium);
        assert!(
            ConvergenceSeries::new(vec![2, 1], vec![v.clone(), v], Extrapolation::Aitken).is_err()
        );
        assert!(constant_c(&[5, 10, 20]).is_err());
    }
}
