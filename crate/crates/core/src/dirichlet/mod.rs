//! Hitting distributions and Green sums of simple random walk on a finite
//! window with absorbing sets.
//!
//! Every problem carries an explicit leak class on the outer boundary of its
//! window, so each answer comes with the probability that the walk escaped the
//! computational region before being decided.

mod rational;

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Site, Window};

pub use rational::{rational_exit, RationalDistribution, RATIONAL_MAX_N};

/// Name of the class made of the window's outer boundary.
pub const LEAK_CLASS: &str = "window-leak";

/// Default residual bound of the linear solves.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

const FREE: u32 = u32::MAX;

/// Interval `[lo, hi]` around a central `value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub value: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, value: f64, hi: f64) -> Self {
        debug_assert!(lo <= value && value <= hi, "{lo} {value} {hi}");
        Bracket { lo, value, hi }
    }

    pub fn point(value: f64) -> Self {
        Bracket {
            lo: value,
            value,
            hi: value,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn scale(&self, k: f64) -> Self {
        if k >= 0.0 {
            Bracket::new(self.lo * k, self.value * k, self.hi * k)
        } else {
            Bracket::new(self.hi * k, self.value * k, self.lo * k)
        }
    }

    /// Distance between the two intervals, zero when they overlap.
    pub fn gap(&self, other: &Bracket) -> f64 {
        (other.lo - self.hi).max(self.lo - other.hi).max(0.0)
    }
}

/// Absorbing geometry on a window: named classes of sites plus the implicit
/// leak class, and optionally directed edges whose arrival mass is tallied.
#[derive(Clone, Debug)]
pub struct AbsorbingProblem {
    window: Window,
    names: Vec<String>,
    class_of: HashMap<Site, u32>,
    directed: Vec<(Site, Site)>,
    tolerance: f64,
    max_iterations: usize,
}

impl AbsorbingProblem {
    pub fn new(window: Window) -> Self {
        AbsorbingProblem {
            window,
            names: Vec::new(),
            class_of: HashMap::new(),
            directed: Vec::new(),
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 400_000,
        }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    fn in_reach(&self, s: Site) -> bool {
        let w = self.window;
        let dx = (w.x1_min - s.x1).max(s.x1 - w.x1_max).max(0);
        let dy = (w.x2_min - s.x2).max(s.x2 - w.x2_max).max(0);
        dx + dy <= 1
    }

    fn class_index(&mut self, name: &str) -> Result<u32> {
        if name == LEAK_CLASS {
            return Err(Error::Precondition(format!(
                "class name {LEAK_CLASS} is reserved"
            )));
        }
        Ok(match self.names.iter().position(|n| n == name) {
            Some(i) => i as u32,
            None => {
                self.names.push(name.to_string());
                (self.names.len() - 1) as u32
            }
        })
    }

    /// Add sites to a named class. Every site must lie in the window or on
    /// its outer boundary, and belong to at most one class.
    pub fn with_class(mut self, name: &str, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let c = self.class_index(name)?;
        for s in sites {
            if !self.in_reach(s) {
                return Err(Error::Precondition(format!(
                    "absorbing site {s} lies outside the window and its outer boundary"
                )));
            }
            if let Some(&old) = self.class_of.get(&s) {
                if old != c {
                    return Err(Error::Precondition(format!(
                        "site {s} assigned to classes {} and {name}",
                        self.names[old as usize]
                    )));
                }
            }
            self.class_of.insert(s, c);
        }
        Ok(self)
    }

    /// Like [`with_class`](Self::with_class) but silently drops sites out of reach.
    pub fn with_class_clipped(
        self,
        name: &str,
        sites: impl IntoIterator<Item = Site>,
    ) -> Result<Self> {
        let keep: Vec<Site> = sites.into_iter().filter(|&s| self.in_reach(s)).collect();
        self.with_class(name, keep)
    }

    /// The horizontal line `L_h` restricted to the window and its boundary.
    pub fn with_line(self, name: &str, h: i64) -> Result<Self> {
        let w = self.window;
        self.with_class_clipped(
            name,
            (w.x1_min - 1..=w.x1_max + 1).map(|x1| Site::new(x1, h)),
        )
    }

    /// Tally the mass absorbed at `at` with previous site `prev`.
    pub fn with_directed(mut self, at: Site, prev: Site) -> Result<Self> {
        if !at.is_adjacent(prev) {
            return Err(Error::Precondition(format!(
                "{prev} -> {at} is not an edge"
            )));
        }
        self.directed.push((at, prev));
        Ok(self)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn class_names(&self) -> &[String] {
        &self.names
    }

    /// Class of an absorbing site; sites on the outer boundary outside every
    /// named class report the leak class.
    pub fn class_of(&self, s: Site) -> Option<&str> {
        match self.class_of.get(&s) {
            Some(&c) => Some(&self.names[c as usize]),
            None if self.in_reach(s) && !self.window.contains(s) => Some(LEAK_CLASS),
            None => None,
        }
    }

    pub fn is_absorbing(&self, s: Site) -> bool {
        self.class_of(s).is_some()
    }

    fn grid(&self) -> Grid {
        let w = self.window;
        let cols = w.width() + 2;
        let rows = w.height() + 2;
        let leak = self.names.len() as u32;
        let mut state = vec![FREE; cols * rows];
        for r in 0..rows {
            for c in 0..cols {
                if r == 0 || c == 0 || r == rows - 1 || c == cols - 1 {
                    state[r * cols + c] = leak;
                }
            }
        }
        let origin = Site::new(w.x1_min - 1, w.x2_min - 1);
        for (&s, &c) in &self.class_of {
            let d = s - origin;
            state[d.x2 as usize * cols + d.x1 as usize] = c;
        }
        Grid {
            origin,
            cols,
            rows,
            state,
        }
    }
}

struct Grid {
    origin: Site,
    cols: usize,
    rows: usize,
    state: Vec<u32>,
}

impl Grid {
    fn index(&self, s: Site) -> Option<usize> {
        let d = s - self.origin;
        (d.x1 >= 0 && d.x2 >= 0 && (d.x1 as usize) < self.cols && (d.x2 as usize) < self.rows)
            .then(|| d.x2 as usize * self.cols + d.x1 as usize)
    }

    fn site(&self, i: usize) -> Site {
        self.origin + Site::new((i % self.cols) as i64, (i / self.cols) as i64)
    }

    fn is_free(&self, i: usize) -> bool {
        self.state[i] == FREE
    }

    /// `y = (I − P) x` on free cells, zero elsewhere.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let c = self.cols;
        for r in 1..self.rows - 1 {
            for i in r * c + 1..r * c + c - 1 {
                y[i] = if self.state[i] == FREE {
                    x[i] - 0.25 * (x[i - 1] + x[i + 1] + x[i - c] + x[i + c])
                } else {
                    0.0
                };
            }
        }
    }

    /// Conjugate gradients for `(I − P) g = b` restricted to free cells.
    fn solve(&self, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64, usize)> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut q = vec![0.0; n];
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let target = tol * dot(b, b).sqrt().max(1.0) * 0.5;
        let mut rr = dot(&r, &r);
        let mut it = 0;
        while rr.sqrt() > target && it < max_iter {
            self.apply(&p, &mut q);
            let alpha = rr / dot(&p, &q);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            let next = dot(&r, &r);
            let beta = next / rr;
            rr = next;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            it += 1;
        }
        self.apply(&x, &mut q);
        let residual = b
            .iter()
            .zip(&q)
            .map(|(b, q)| (b - q).abs())
            .fold(0.0, f64::max);
        if residual > tol.max(1e-300) * dot(b, b).sqrt().max(1.0) {
            return Err(Error::NotConverged {
                residual,
                iterations: it,
            });
        }
        Ok((x, residual, it))
    }
}

/// Mass on each absorbing site reached, with its class, plus tallies.
#[derive(Clone, Debug)]
pub struct HittingDistribution {
    names: Vec<String>,
    sites: BTreeMap<Site, (u32, f64)>,
    edges: BTreeMap<(Site, Site), f64>,
    /// Total mass absorbed on the window's outer boundary outside every class.
    pub defect: f64,
    /// Infinity-norm residual of the linear solve.
    pub residual: f64,
    pub iterations: usize,
}

impl HittingDistribution {
    /// Distribution with a single named class and no leak.
    pub(crate) fn from_masses(
        class: &str,
        masses: impl IntoIterator<Item = (Site, f64)>,
        residual: f64,
    ) -> Self {
        HittingDistribution {
            names: vec![class.to_string(), LEAK_CLASS.to_string()],
            sites: masses.into_iter().map(|(s, m)| (s, (0, m))).collect(),
            edges: BTreeMap::new(),
            defect: 0.0,
            residual,
            iterations: 0,
        }
    }

    pub fn mass(&self, s: Site) -> f64 {
        self.sites.get(&s).map_or(0.0, |&(_, m)| m)
    }

    /// Mass absorbed at `at` coming from `prev`; only registered edges are tallied.
    pub fn edge_mass(&self, at: Site, prev: Site) -> f64 {
        self.edges.get(&(at, prev)).copied().unwrap_or(0.0)
    }

    pub fn class_mass(&self, name: &str) -> f64 {
        let Some(c) = self.names.iter().position(|n| n == name) else {
            return 0.0;
        };
        self.sites
            .values()
            .filter(|&&(k, _)| k == c as u32)
            .map(|&(_, m)| m)
            .sum()
    }

    /// Total mass on named classes (the leak class excluded).
    pub fn total(&self) -> f64 {
        let leak = (self.names.len() - 1) as u32;
        self.sites
            .values()
            .filter(|&&(k, _)| k != leak)
            .map(|&(_, m)| m)
            .sum()
    }

    /// `(site, class, mass)` for every site that received mass.
    pub fn iter(&self) -> impl Iterator<Item = (Site, &str, f64)> + '_ {
        self.sites
            .iter()
            .map(|(&s, &(c, m))| (s, self.names[c as usize].as_str(), m))
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x1,x2,class,mass")?;
        for (s, class, m) in self.iter() {
            writeln!(w, "{},{},{},{:.17e}", s.x1, s.x2, class, m)?;
        }
        Ok(())
    }
}

/// Green function `g(y) = E[# visits to y before absorption]` for a source
/// distribution, kept on the padded grid.
struct Green {
    grid: Grid,
    g: Vec<f64>,
    direct: Vec<(usize, f64, usize)>,
    residual: f64,
    iterations: usize,
}

fn green(problem: &AbsorbingProblem, start: Site, kick: bool) -> Result<Green> {
    let grid = problem.grid();
    let Some(si) = grid.index(start) else {
        return Err(Error::Precondition(format!(
            "start {start} outside the window and its boundary"
        )));
    };
    let mut b = vec![0.0; grid.state.len()];
    let mut direct = Vec::new();
    if kick {
        if grid.is_free(si) {
            return Err(Error::Precondition(format!(
                "kick start {start} is not absorbing"
            )));
        }
        for s in start.neighbors() {
            match grid.index(s) {
                Some(j) if grid.is_free(j) => b[j] += 0.25,
                Some(j) => direct.push((j, 0.25, si)),
                None => direct.push((usize::MAX, 0.25, si)),
            }
        }
    } else {
        if !grid.is_free(si) {
            return Err(Error::Precondition(format!(
                "start {start} is absorbing or outside the window; use kick_start"
            )));
        }
        b[si] = 1.0;
    }
    let (g, residual, iterations) = if b.iter().any(|&v| v != 0.0) {
        grid.solve(&b, problem.tolerance, problem.max_iterations)?
    } else {
        (b, 0.0, 0)
    };
    Ok(Green {
        grid,
        g,
        direct,
        residual,
        iterations,
    })
}

fn distribution(problem: &AbsorbingProblem, green: Green) -> HittingDistribution {
    let Green {
        grid,
        g,
        direct,
        residual,
        iterations,
    } = green;
    let mut names = problem.names.clone();
    names.push(LEAK_CLASS.to_string());
    let leak = (names.len() - 1) as u32;
    let mut sites: BTreeMap<Site, (u32, f64)> = BTreeMap::new();
    let mut edges = BTreeMap::new();
    for &(at, prev) in &problem.directed {
        if let (Some(a), Some(p)) = (grid.index(at), grid.index(prev)) {
            if !grid.is_free(a) && grid.is_free(p) {
                edges.insert((at, prev), 0.25 * g[p]);
            }
        }
    }
    let c = grid.cols;
    for r in 0..grid.rows {
        for col in 0..c {
            let i = r * c + col;
            if grid.is_free(i) {
                continue;
            }
            let mut m = 0.0;
            for (dc, dr) in [(1i64, 0i64), (0, 1), (-1, 0), (0, -1)] {
                let (nc, nr) = (col as i64 + dc, r as i64 + dr);
                if nc < 0 || nr < 0 || nc >= c as i64 || nr >= grid.rows as i64 {
                    continue;
                }
                let j = nr as usize * c + nc as usize;
                if grid.is_free(j) {
                    m += 0.25 * g[j];
                }
            }
            if m != 0.0 {
                sites.insert(grid.site(i), (grid.state[i], m));
            }
        }
    }
    let mut defect_direct = 0.0;
    for (j, w, from) in direct {
        if j == usize::MAX {
            defect_direct += w;
            continue;
        }
        let s = grid.site(j);
        let e = sites.entry(s).or_insert((grid.state[j], 0.0));
        e.1 += w;
        let prev = grid.site(from);
        if problem.directed.contains(&(s, prev)) {
            *edges.entry((s, prev)).or_insert(0.0) += w;
        }
    }
    let defect = defect_direct
        + sites
            .values()
            .filter(|&&(k, _)| k == leak)
            .map(|&(_, m)| m)
            .sum::<f64>();
    HittingDistribution {
        names,
        sites,
        edges,
        defect,
        residual,
        iterations,
    }
}

/// Distribution of the absorption site for the walk started at a free `start`.
pub fn hit_distribution(start: Site, problem: &AbsorbingProblem) -> Result<HittingDistribution> {
    Ok(distribution(problem, green(problem, start, false)?))
}

/// Distribution of `S_τ` with `τ ≥ 1` for the walk started at an absorbing site.
pub fn kick_start(x: Site, problem: &AbsorbingProblem) -> Result<HittingDistribution> {
    Ok(distribution(problem, green(problem, x, true)?))
}

/// Hitting distribution from `x`, kick-started when `x` is absorbing.
pub fn hit_from(x: Site, problem: &AbsorbingProblem) -> Result<HittingDistribution> {
    let kick = problem.is_absorbing(x);
    Ok(distribution(problem, green(problem, x, kick)?))
}

/// `Σ_{y ∈ targets} E_x[# visits to y before absorption]`, kick-started when
/// `x` is absorbing. The upper end adds the leak probability times the largest
/// in-window expected number of visits.
pub fn expected_visits(x: Site, targets: &[Site], problem: &AbsorbingProblem) -> Result<Bracket> {
    if targets.is_empty() {
        return Ok(Bracket::point(0.0));
    }
    let kick = problem.is_absorbing(x);
    let from_x = green(problem, x, kick)?;
    let grid = &from_x.grid;
    let mut rhs = vec![0.0; grid.state.len()];
    let mut value = 0.0;
    for &y in targets {
        match grid.index(y) {
            Some(i) if grid.is_free(i) => {
                value += from_x.g[i];
                rhs[i] += 1.0;
            }
            _ => {
                return Err(Error::Precondition(format!(
                    "target {y} is absorbing or outside the window"
                )))
            }
        }
    }
    let defect = distribution(problem, from_x).defect;
    if defect <= 0.0 {
        return Ok(Bracket::point(value));
    }
    let (u, _, _) = problem
        .grid()
        .solve(&rhs, problem.tolerance, problem.max_iterations)?;
    let umax = u.iter().copied().fold(0.0, f64::max);
    Ok(Bracket::new(value, value, value + defect * umax))
}

/// Probability of reaching `barrier` before `a_set` from `x` (first step taken
/// unconditionally when `x` lies in either set), as `[p, p + defect]`.
pub fn escape_probability(
    x: Site,
    a_set: &[Site],
    barrier: &[Site],
    window: Window,
) -> Result<Bracket> {
    let problem = AbsorbingProblem::new(window)
        .with_class_clipped("barrier", barrier.iter().copied())?
        .with_class_clipped("A", a_set.iter().copied().filter(|s| !barrier.contains(s)))?;
    let d = hit_from(x, &problem)?;
    let p = d.class_mass("barrier");
    Ok(Bracket::new(p, p, p + d.defect))
}

/// Solve on windows `core` padded by `pad, 2·pad, 4·pad, …` until the leak
/// falls below `target` or the window budget is reached; returns the last
/// distribution and its window.
pub fn solve_padded(
    core: Window,
    pad: i64,
    target: f64,
    mut build: impl FnMut(Window) -> Result<(Site, AbsorbingProblem)>,
) -> Result<(HittingDistribution, Window)> {
    let mut pad = pad.max(1);
    let mut best: Option<(HittingDistribution, Window)> = None;
    loop {
        let w = core.padded(pad, pad);
        let w = match Window::new(w.x1_min, w.x1_max, w.x2_min, w.x2_max) {
            Ok(w) => w,
            Err(e @ Error::WindowBudget { .. }) => {
                return best.ok_or(e).inspect(|(d, _)| {
                    log::warn!("window budget reached with defect {:e}", d.defect)
                });
            }
            Err(e) => return Err(e),
        };
        let (start, problem) = build(w)?;
        let d = hit_from(start, &problem)?;
        let done = d.defect < target;
        best = Some((d, w));
        if done {
            return Ok(best.unwrap());
        }
        pad *= 2;
    }
}
