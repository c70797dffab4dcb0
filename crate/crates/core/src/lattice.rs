//! Lattice geometry shared by every solver: sites, rectangular windows,
//! half-plane sets `A ⊇ L₀` with their growth certificates, truncations,
//! vertex boundaries and the named rectangles used by the scaling checks.
//!
//! The ambient lattice is the full plane `Z²`. The upper half plane only
//! enters through which sites are absorbing.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of sites a [`Window`] may cover.
pub const DEFAULT_WINDOW_BUDGET: u64 = 6_000_000;

/// Default cap on the number of sites materialized by [`truncate`].
pub const DEFAULT_SITE_BUDGET: usize = 2_000_000;

pub type SiteSet = BTreeSet<Site>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x1: i64,
    pub x2: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x1: 0, x2: 0 };
    pub const STEPS: [Site; 4] = [
        Site { x1: 1, x2: 0 },
        Site { x1: -1, x2: 0 },
        Site { x1: 0, x2: 1 },
        Site { x1: 0, x2: -1 },
    ];

    pub const fn new(x1: i64, x2: i64) -> Self {
        Site { x1, x2 }
    }

    pub fn neighbors(self) -> [Site; 4] {
        Site::STEPS.map(|d| self + d)
    }

    /// Reflection across the line `x2 = 0`.
    pub fn reflect(self) -> Site {
        Site::new(self.x1, -self.x2)
    }

    /// Reflection across the line `x1 = 0`.
    pub fn mirror(self) -> Site {
        Site::new(-self.x1, self.x2)
    }

    pub fn norm(self) -> f64 {
        ((self.x1 * self.x1 + self.x2 * self.x2) as f64).sqrt()
    }

    pub fn norm1(self) -> i64 {
        self.x1.abs() + self.x2.abs()
    }

    pub fn norm_sq(self) -> i64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    pub fn is_adjacent(self, other: Site) -> bool {
        (self - other).norm1() == 1
    }
}

impl Add for Site {
    type Output = Site;
    fn add(self, o: Site) -> Site {
        Site::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Site {
    type Output = Site;
    fn sub(self, o: Site) -> Site {
        Site::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Neg for Site {
    type Output = Site;
    fn neg(self) -> Site {
        Site::new(-self.x1, -self.x2)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x1, self.x2)
    }
}

impl From<(i64, i64)> for Site {
    fn from((x1, x2): (i64, i64)) -> Self {
        Site::new(x1, x2)
    }
}

/// `⌊x^p⌋` with a guard against `powf` landing a hair below an exact integer
/// (so `⌊16^0.75⌋ = 8`).
pub fn floor_pow(x: f64, p: f64) -> i64 {
    let v = x.powf(p);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as i64
    } else {
        v.floor() as i64
    }
}

/// `⌈x^p⌉`, same guard as [`floor_pow`].
pub fn ceil_pow(x: f64, p: f64) -> i64 {
    let v = x.powf(p);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as i64
    } else {
        v.ceil() as i64
    }
}

/// Finite rectangular computation region `[x1_min,x1_max] × [x2_min,x2_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub x1_min: i64,
    pub x1_max: i64,
    pub x2_min: i64,
    pub x2_max: i64,
}

impl Window {
    pub fn new(x1_min: i64, x1_max: i64, x2_min: i64, x2_max: i64) -> Result<Self> {
        Self::with_budget(x1_min, x1_max, x2_min, x2_max, DEFAULT_WINDOW_BUDGET)
    }

    pub fn with_budget(
        x1_min: i64,
        x1_max: i64,
        x2_min: i64,
        x2_max: i64,
        budget: u64,
    ) -> Result<Self> {
        if x1_min > x1_max || x2_min > x2_max {
            return Err(Error::InvalidWindow {
                x1_min,
                x1_max,
                x2_min,
                x2_max,
            });
        }
        let w = Window {
            x1_min,
            x1_max,
            x2_min,
            x2_max,
        };
        if w.n_sites() > budget {
            return Err(Error::WindowBudget {
                sites: w.n_sites(),
                max: budget,
            });
        }
        Ok(w)
    }

    /// Smallest window containing every site (`None` for an empty iterator).
    pub fn bounding<'a>(sites: impl IntoIterator<Item = &'a Site>) -> Option<Window> {
        let mut it = sites.into_iter();
        let first = it.next()?;
        let mut w = Window {
            x1_min: first.x1,
            x1_max: first.x1,
            x2_min: first.x2,
            x2_max: first.x2,
        };
        for s in it {
            w.x1_min = w.x1_min.min(s.x1);
            w.x1_max = w.x1_max.max(s.x1);
            w.x2_min = w.x2_min.min(s.x2);
            w.x2_max = w.x2_max.max(s.x2);
        }
        Some(w)
    }

    pub fn width(&self) -> usize {
        (self.x1_max - self.x1_min + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.x2_max - self.x2_min + 1) as usize
    }

    pub fn n_sites(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn contains(&self, s: Site) -> bool {
        s.x1 >= self.x1_min && s.x1 <= self.x1_max && s.x2 >= self.x2_min && s.x2 <= self.x2_max
    }

    /// Row-major index (rows are constant `x2`).
    pub fn index(&self, s: Site) -> Option<usize> {
        self.contains(s)
            .then(|| (s.x2 - self.x2_min) as usize * self.width() + (s.x1 - self.x1_min) as usize)
    }

    pub fn site(&self, idx: usize) -> Site {
        let w = self.width();
        Site::new(
            self.x1_min + (idx % w) as i64,
            self.x2_min + (idx / w) as i64,
        )
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (self.x2_min..=self.x2_max)
            .flat_map(move |x2| (self.x1_min..=self.x1_max).map(move |x1| Site::new(x1, x2)))
    }

    pub fn padded(&self, dx: i64, dy: i64) -> Window {
        Window {
            x1_min: self.x1_min - dx,
            x1_max: self.x1_max + dx,
            x2_min: self.x2_min - dy,
            x2_max: self.x2_max + dy,
        }
    }

    /// Sites outside the window at l1 distance 1 from it.
    pub fn outer_boundary(&self) -> Vec<Site> {
        let mut v = Vec::with_capacity(2 * (self.width() + self.height()));
        for x1 in self.x1_min..=self.x1_max {
            v.push(Site::new(x1, self.x2_min - 1));
            v.push(Site::new(x1, self.x2_max + 1));
        }
        for x2 in self.x2_min..=self.x2_max {
            v.push(Site::new(self.x1_min - 1, x2));
            v.push(Site::new(self.x1_max + 1, x2));
        }
        v
    }

    /// Up edge `[x1_min,x1_max] × {x2_max}`.
    pub fn top_row(&self) -> Vec<Site> {
        (self.x1_min..=self.x1_max)
            .map(|x1| Site::new(x1, self.x2_max))
            .collect()
    }

    /// Bottom edge `[x1_min,x1_max] × {x2_min}`.
    pub fn bottom_row(&self) -> Vec<Site> {
        (self.x1_min..=self.x1_max)
            .map(|x1| Site::new(x1, self.x2_min))
            .collect()
    }
}

/// Sub-linear growth certificate: beyond `|x1| > k0` every column of the set
/// has height at most `|x1|^alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub alpha: f64,
    pub k0: i64,
}

impl GrowthCertificate {
    pub fn new(alpha: f64, k0: i64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidGrowth(alpha));
        }
        Ok(GrowthCertificate {
            alpha,
            k0: k0.max(0),
        })
    }

    /// `(1+α)/2`: box height exponent and line-sum width exponent.
    pub fn alpha1(&self) -> f64 {
        (1.0 + self.alpha) / 2.0
    }

    /// `(7+α)/8`: half-width exponent of the middle section `l_n`.
    pub fn alpha2(&self) -> f64 {
        (7.0 + self.alpha) / 8.0
    }

    /// Whether a site is allowed by the certificate.
    pub fn admits(&self, s: Site) -> bool {
        s.x1.abs() <= self.k0 || (s.x2 as f64) <= (s.x1.abs() as f64).powf(self.alpha) + 1e-12
    }
}

impl Default for GrowthCertificate {
    fn default() -> Self {
        GrowthCertificate { alpha: 0.5, k0: 0 }
    }
}

/// Column-height rules for infinite sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRule {
    /// `h(k) = ⌊|k|^alpha⌋` for `|k| > k0`, zero otherwise.
    FloorPow,
}

/// A set `A` with `L₀ ⊆ A ⊆ H`: the line, a finite decoration and an optional
/// column profile `{k} × [1, h(k)]`.
#[derive(Clone, Debug)]
pub struct HalfPlaneSet {
    decoration: Vec<Site>,
    lookup: HashSet<Site>,
    profile: Option<ColumnRule>,
    growth: GrowthCertificate,
}

impl HalfPlaneSet {
    /// The bare line `L₀`.
    pub fn l0() -> Self {
        HalfPlaneSet {
            decoration: Vec::new(),
            lookup: HashSet::new(),
            profile: None,
            growth: GrowthCertificate::default(),
        }
    }

    /// `L₀` plus finitely many sites above it.
    pub fn with_sites(sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let mut decoration: Vec<Site> = sites.into_iter().collect();
        decoration.sort();
        decoration.dedup();
        if let Some(bad) = decoration.iter().find(|s| s.x2 < 1) {
            return Err(Error::SetSpec(format!(
                "decoration site {bad} is not strictly above L0"
            )));
        }
        let k0 = decoration.iter().map(|s| s.x1.abs()).max().unwrap_or(0);
        Ok(HalfPlaneSet {
            lookup: decoration.iter().copied().collect(),
            decoration,
            profile: None,
            growth: GrowthCertificate { alpha: 0.5, k0 },
        })
    }

    /// `L₀ ∪ {k} × [1, height]`.
    pub fn column(k: i64, height: i64) -> Result<Self> {
        Self::with_sites((1..=height).map(|x2| Site::new(k, x2)))
    }

    /// Infinite profile set with columns `⌊|k|^alpha⌋` beyond `k0`.
    pub fn profile(alpha: f64, k0: i64) -> Result<Self> {
        let growth = GrowthCertificate::new(alpha, k0)?;
        Ok(HalfPlaneSet {
            decoration: Vec::new(),
            lookup: HashSet::new(),
            profile: Some(ColumnRule::FloorPow),
            growth,
        })
    }

    pub fn with_growth(mut self, growth: GrowthCertificate) -> Self {
        self.growth = growth;
        self
    }

    pub fn decoration(&self) -> &[Site] {
        &self.decoration
    }

    pub fn growth(&self) -> GrowthCertificate {
        self.growth
    }

    pub fn is_finite_decoration(&self) -> bool {
        self.profile.is_none()
    }

    /// Column height of the profile at `k` (0 when there is no profile).
    pub fn column_height(&self, k: i64) -> i64 {
        match self.profile {
            Some(ColumnRule::FloorPow) if k.abs() > self.growth.k0 => {
                floor_pow(k.abs() as f64, self.growth.alpha)
            }
            _ => 0,
        }
    }

    pub fn contains(&self, s: Site) -> bool {
        s.x2 == 0 || (s.x2 >= 1 && (self.lookup.contains(&s) || s.x2 <= self.column_height(s.x1)))
    }

    /// Highest site of the set strictly above `L₀` with `|x1| <= reach`.
    pub fn max_height(&self, reach: i64) -> i64 {
        let deco = self
            .decoration
            .iter()
            .filter(|s| s.x1.abs() <= reach)
            .map(|s| s.x2)
            .max()
            .unwrap_or(0);
        let prof = (-reach..=reach)
            .map(|k| self.column_height(k))
            .max()
            .unwrap_or(0);
        deco.max(prof)
    }

    /// Sites of `A` strictly above `L₀` with `|x1| <= reach`, sorted.
    pub fn sites_above_l0(&self, reach: i64) -> Vec<Site> {
        let mut v: Vec<Site> = self
            .decoration
            .iter()
            .copied()
            .filter(|s| s.x1.abs() <= reach)
            .collect();
        if self.profile.is_some() {
            for k in -reach..=reach {
                for x2 in 1..=self.column_height(k) {
                    v.push(Site::new(k, x2));
                }
            }
        }
        v.sort();
        v.dedup();
        v
    }

    /// Whether the decoration and profile honor the certificate on `[-reach, reach]`.
    pub fn certificate_holds(&self, reach: i64) -> bool {
        self.sites_above_l0(reach)
            .iter()
            .all(|&s| self.growth.admits(s))
    }

    pub fn spec(&self) -> SetSpec {
        match self.profile {
            Some(ColumnRule::FloorPow) => SetSpec::Profile {
                alpha: self.growth.alpha,
                k0: self.growth.k0,
                rule: ColumnRule::FloorPow,
            },
            None if self.decoration.is_empty() => SetSpec::L0,
            None => SetSpec::L0Plus {
                sites: self.decoration.iter().map(|s| [s.x1, s.x2]).collect(),
            },
        }
    }
}

/// JSON set specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SetSpec {
    L0,
    #[serde(rename = "L0_plus")]
    L0Plus {
        sites: Vec<[i64; 2]>,
    },
    #[serde(rename = "profile")]
    Profile {
        alpha: f64,
        #[serde(default)]
        k0: i64,
        rule: ColumnRule,
    },
}

impl SetSpec {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json)
            .map_err(|e| Error::SetSpec(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn build(&self) -> Result<HalfPlaneSet> {
        match self {
            SetSpec::L0 => Ok(HalfPlaneSet::l0()),
            SetSpec::L0Plus { sites } => {
                HalfPlaneSet::with_sites(sites.iter().map(|&[a, b]| Site::new(a, b)))
            }
            SetSpec::Profile { alpha, k0, .. } => HalfPlaneSet::profile(*alpha, *k0),
        }
    }
}

/// `A_n = A ∩ ([-n,n] × Z)`, materialized.
#[derive(Clone, Debug)]
pub struct TruncatedSet {
    pub n: i64,
    sites: Vec<Site>,
    lookup: HashSet<Site>,
}

impl TruncatedSet {
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, s: Site) -> bool {
        self.lookup.contains(&s)
    }

    pub fn to_set(&self) -> SiteSet {
        self.sites.iter().copied().collect()
    }
}

pub fn truncate(a: &HalfPlaneSet, n: i64) -> Result<TruncatedSet> {
    truncate_with_budget(a, n, DEFAULT_SITE_BUDGET)
}

pub fn truncate_with_budget(a: &HalfPlaneSet, n: i64, budget: usize) -> Result<TruncatedSet> {
    if n < 1 {
        return Err(Error::Precondition(format!(
            "truncation width n={n} must be positive"
        )));
    }
    let mut sites: Vec<Site> = (-n..=n).map(|x1| Site::new(x1, 0)).collect();
    let above = a.sites_above_l0(n);
    if sites.len() + above.len() > budget {
        return Err(Error::SiteBudget {
            n,
            sites: sites.len() + above.len(),
            max: budget,
        });
    }
    sites.extend(above);
    sites.sort();
    Ok(TruncatedSet {
        n,
        lookup: sites.iter().copied().collect(),
        sites,
    })
}

/// `D_n = [-n,n] × {0}`.
pub fn segment(n: i64) -> Vec<Site> {
    (-n..=n).map(|x1| Site::new(x1, 0)).collect()
}

/// Which lattice the vertex boundaries are taken in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Ambient {
    #[default]
    Plane,
    /// Only neighbours with `x2 >= 0` count, as in the half-plane definition.
    HalfPlane,
}

/// Inner and outer vertex boundaries of a finite set in the full plane.
pub fn boundaries(s: &SiteSet) -> (SiteSet, SiteSet) {
    boundaries_in(s, Ambient::Plane)
}

pub fn boundaries_in(s: &SiteSet, ambient: Ambient) -> (SiteSet, SiteSet) {
    let allowed = |y: Site| ambient == Ambient::Plane || y.x2 >= 0;
    let mut inner = SiteSet::new();
    let mut outer = SiteSet::new();
    for &x in s {
        for y in x.neighbors() {
            if !s.contains(&y) && allowed(y) {
                inner.insert(x);
                outer.insert(y);
            }
        }
    }
    (inner, outer)
}

/// Sites of `s` adjacent to the infinite component of its complement.
pub fn accessible_skin(s: &SiteSet) -> SiteSet {
    let Some(bb) = Window::bounding(s) else {
        return SiteSet::new();
    };
    let pad = bb.padded(1, 1);
    let w = pad.width();
    let mut seen = vec![false; pad.n_sites() as usize];
    let mut queue = VecDeque::new();
    let start = Site::new(pad.x1_min, pad.x2_min);
    seen[pad.index(start).unwrap()] = true;
    queue.push_back(start);
    let mut skin = SiteSet::new();
    while let Some(z) = queue.pop_front() {
        for y in z.neighbors() {
            let Some(i) = pad.index(y) else { continue };
            if s.contains(&y) {
                skin.insert(y);
            } else if !seen[i] {
                seen[i] = true;
                queue.push_back(y);
            }
        }
    }
    debug_assert!(seen.len() == w * pad.height());
    skin
}

/// Rectangle with its four named edges. Edge conventions follow the
/// constructor; corners may belong to more than one edge.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedBox {
    pub window: Window,
    pub up: Vec<Site>,
    pub bottom: Vec<Site>,
    pub left: Vec<Site>,
    pub right: Vec<Site>,
}

impl NamedBox {
    pub fn sites(&self) -> SiteSet {
        self.window.sites().collect()
    }

    /// Union of the four edges.
    pub fn frame(&self) -> SiteSet {
        self.up
            .iter()
            .chain(&self.bottom)
            .chain(&self.left)
            .chain(&self.right)
            .copied()
            .collect()
    }
}

/// `I_n = [-n,n] × [0,n]`; left/right edges are `{∓n} × [1,n]`, so the top
/// corners sit on both a side and the up edge.
pub fn i_box(n: i64) -> NamedBox {
    let window = Window {
        x1_min: -n,
        x1_max: n,
        x2_min: 0,
        x2_max: n,
    };
    NamedBox {
        window,
        up: window.top_row(),
        bottom: window.bottom_row(),
        left: (1..=n).map(|x2| Site::new(-n, x2)).collect(),
        right: (1..=n).map(|x2| Site::new(n, x2)).collect(),
    }
}

/// Height `⌊n^{α₁}⌋` of `Box(n)`.
pub fn box_height(n: i64, growth: GrowthCertificate) -> i64 {
    floor_pow(n as f64, growth.alpha1())
}

/// Half-width `⌊n^{α₂}⌋` of `l_n`.
pub fn middle_half_width(n: i64, growth: GrowthCertificate) -> i64 {
    floor_pow(n as f64, growth.alpha2())
}

/// `Box(n) = [-n,n] × [0, ⌊n^{α₁}⌋]`; side edges exclude both corners.
pub fn box_n(n: i64, growth: GrowthCertificate) -> NamedBox {
    let h = box_height(n, growth);
    let window = Window {
        x1_min: -n,
        x1_max: n,
        x2_min: 0,
        x2_max: h,
    };
    NamedBox {
        window,
        up: window.top_row(),
        bottom: window.bottom_row(),
        left: (1..h).map(|x2| Site::new(-n, x2)).collect(),
        right: (1..h).map(|x2| Site::new(n, x2)).collect(),
    }
}

/// `Box̂(m,n) = [-n,n] × [-m,0]`.
pub fn half_box(m: i64, n: i64) -> Result<NamedBox> {
    if m < 1 {
        return Err(Error::Precondition(format!(
            "half-box depth m={m} must be at least 1"
        )));
    }
    let window = Window {
        x1_min: -n,
        x1_max: n,
        x2_min: -m,
        x2_max: 0,
    };
    Ok(NamedBox {
        window,
        up: window.top_row(),
        bottom: window.bottom_row(),
        left: (-m + 1..0).map(|x2| Site::new(-n, x2)).collect(),
        right: (-m + 1..0).map(|x2| Site::new(n, x2)).collect(),
    })
}

/// The pair of vertical half-lines `{±⌊m^{1/α}⌋} × Z≥0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FLines {
    pub offset: i64,
}

impl FLines {
    pub fn new(m: i64, alpha: f64) -> Self {
        FLines {
            offset: floor_pow(m as f64, 1.0 / alpha),
        }
    }

    pub fn contains(&self, s: Site) -> bool {
        s.x2 >= 0 && s.x1.abs() == self.offset
    }
}

/// All the named regions at scale `n` for a growth exponent.
#[derive(Clone, Debug)]
pub struct SpecialRegions {
    pub i_n: NamedBox,
    pub box_n: NamedBox,
    /// Middle section of the up edge of `Box(n)`.
    pub l_n: Vec<Site>,
    /// Rest of the inner boundary of `Box(n)` except the bottom edge.
    pub l_n_c: Vec<Site>,
    pub f_lines: FLines,
    pub half_box: NamedBox,
}

pub fn special_regions(n: i64, m: i64, growth: GrowthCertificate) -> Result<SpecialRegions> {
    let b = box_n(n, growth);
    let h = b.window.x2_max;
    let half = middle_half_width(n, growth).min(n);
    let l_n: Vec<Site> = (-half..=half).map(|x1| Site::new(x1, h)).collect();
    let mut l_n_c: Vec<Site> =
        b.up.iter()
            .filter(|s| s.x1.abs() > half)
            .chain(&b.left)
            .chain(&b.right)
            .copied()
            .collect();
    l_n_c.sort();
    Ok(SpecialRegions {
        i_n: i_box(n),
        box_n: b,
        l_n,
        l_n_c,
        f_lines: FLines::new(m, growth.alpha),
        half_box: half_box(m, n)?,
    })
}
