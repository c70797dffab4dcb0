use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::{shared_kernel, PotentialKernel};
use crate::dirichlet::HittingDistribution;
use crate::error::{Error, Result};
use crate::lattice::{accessible_skin, Site, SiteSet};

/// Largest accessible skin accepted by the dense solve.
pub const MAX_SKIN: usize = 6000;

const CLAMP_FLOOR: f64 = -1e-8;

/// Harmonic measure from infinity of a finite set.
#[derive(Clone, Debug)]
pub struct EquilibriumResult {
    /// Masses over the accessible skin, summing to one.
    pub measure: HittingDistribution,
    /// Common value of `Σ_y ν(y) a(y − x)` on the skin.
    pub robin: f64,
    /// Largest deviation of `Σ_y ν(y) a(y − x)` from `robin` over the skin.
    pub robin_spread: f64,
    /// Smallest mass before clamping.
    pub min_raw_mass: f64,
    /// Ratio of extreme pivot magnitudes of the factorization.
    pub pivot_ratio: f64,
}

impl EquilibriumResult {
    pub fn mass(&self, s: Site) -> f64 {
        self.measure.mass(s)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x1,x2,mass")?;
        for (s, _, m) in self.measure.iter() {
            writeln!(w, "{},{},{:.17e}", s.x1, s.x2, m)?;
        }
        Ok(())
    }
}

/// Factorized logarithmic equilibrium system of a finite set.
///
/// With `A = [a(s − t)]` over the accessible skin, the bordered matrix
/// `B = [[A, 1], [1ᵀ, 0]]` gives every hitting quantity of the set: solving
/// `B [h; F] = [a(y − ·); 1]` yields `h_z = P_y(S_τ̄ = z)` and `F = F_S(y)`, the
/// escape potential that grows like `(2/π) ln‖y‖`.
pub struct FiniteSetSolver {
    kernel: Arc<PotentialKernel>,
    set: SiteSet,
    skin: Vec<Site>,
    index: HashMap<Site, usize>,
    lu: LU<f64, Dyn, Dyn>,
    nu: Vec<f64>,
    robin: f64,
    robin_spread: f64,
    min_raw: f64,
    pivot_ratio: f64,
}

impl FiniteSetSolver {
    pub fn new(set: &SiteSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Precondition("empty set".into()));
        }
        let skin: Vec<Site> = accessible_skin(set).into_iter().collect();
        let n = skin.len();
        if n > MAX_SKIN {
            return Err(Error::SizeGuard {
                size: n,
                max: MAX_SKIN,
            });
        }
        let extent = skin
            .iter()
            .flat_map(|a| skin.iter().map(move |b| *a - *b))
            .map(|d| d.x1.abs().max(d.x2.abs()))
            .max()
            .unwrap_or(0);
        let kernel = shared_kernel(extent + 2)?;
        let mut b = DMatrix::<f64>::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.a(skin[i] - skin[j]);
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
            b[(i, n)] = 1.0;
            b[(n, i)] = 1.0;
        }
        let lu = b.clone().lu();
        let (pmin, pmax) = lu
            .u()
            .diagonal()
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| {
                (lo.min(p.abs()), hi.max(p.abs()))
            });
        if pmin.is_nan() || pmin <= 0.0 {
            return Err(Error::Singular(format!(
                "zero pivot in equilibrium system of size {n}"
            )));
        }
        let pivot_ratio = pmax / pmin;
        log::debug!("equilibrium system n={n} pivot ratio {pivot_ratio:.3e}");
        let mut rhs = DVector::<f64>::zeros(n + 1);
        rhs[n] = 1.0;
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("equilibrium solve failed".into()))?;
        let robin = -sol[n];
        let mut nu: Vec<f64> = sol.iter().take(n).copied().collect();
        let min_raw = nu.iter().copied().fold(f64::INFINITY, f64::min);
        for (i, m) in nu.iter_mut().enumerate() {
            if *m < CLAMP_FLOOR {
                return Err(Error::NegativeMass {
                    site: skin[i],
                    mass: *m,
                });
            }
            if *m < 0.0 {
                log::warn!("clamping equilibrium mass {m:e} at {}", skin[i]);
                *m = 0.0;
            }
        }
        let total: f64 = nu.iter().sum();
        nu.iter_mut().for_each(|m| *m /= total);
        let robin_spread = (0..n)
            .map(|i| {
                let pot: f64 = (0..n).map(|j| b[(i, j)] * sol[j]).sum();
                (pot - robin).abs()
            })
            .fold(0.0, f64::max);
        let index = skin.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(FiniteSetSolver {
            kernel,
            set: set.clone(),
            skin,
            index,
            lu,
            nu,
            robin,
            robin_spread,
            min_raw,
            pivot_ratio,
        })
    }

    pub fn skin(&self) -> &[Site] {
        &self.skin
    }

    pub fn set(&self) -> &SiteSet {
        &self.set
    }

    pub fn robin(&self) -> f64 {
        self.robin
    }

    /// Harmonic measure from infinity at `s` (zero off the skin).
    pub fn hm(&self, s: Site) -> f64 {
        self.index.get(&s).map_or(0.0, |&i| self.nu[i])
    }

    pub fn equilibrium(&self) -> EquilibriumResult {
        EquilibriumResult {
            measure: HittingDistribution::from_masses(
                "skin",
                self.skin.iter().copied().zip(self.nu.iter().copied()),
                self.robin_spread,
            ),
            robin: self.robin,
            robin_spread: self.robin_spread,
            min_raw_mass: self.min_raw,
            pivot_ratio: self.pivot_ratio,
        }
    }

    fn solve_from(&self, y: Site) -> DVector<f64> {
        let n = self.skin.len();
        let mut rhs = DVector::<f64>::zeros(n + 1);
        for (i, &s) in self.skin.iter().enumerate() {
            rhs[i] = self.kernel.a(y - s);
        }
        rhs[n] = 1.0;
        self.lu
            .solve(&rhs)
            .expect("factorization checked at construction")
    }

    /// `P_y(S_τ̄ = z)` for every skin site `z`, in skin order.
    pub fn hitting_from(&self, y: Site) -> Vec<f64> {
        let v = self.solve_from(y);
        v.iter().take(self.skin.len()).copied().collect()
    }

    /// Escape potential `F_S(y) = Σ_z ν(z) a(y − z) − robin`.
    pub fn escape_potential(&self, y: Site) -> f64 {
        self.skin
            .iter()
            .zip(&self.nu)
            .map(|(&z, &m)| m * self.kernel.a(y - z))
            .sum::<f64>()
            - self.robin
    }

    /// `y ↦ P_y(S_τ̄ = target)` as a cheap closure-like object.
    pub fn hitting_function(&self, target: Site) -> Result<HittingFunction<'_>> {
        let &i = self.index.get(&target).ok_or_else(|| {
            Error::Precondition(format!("{target} is not on the accessible skin"))
        })?;
        let n = self.skin.len();
        let mut rhs = DVector::<f64>::zeros(n + 1);
        rhs[i] = 1.0;
        let v = self
            .lu
            .solve(&rhs)
            .expect("factorization checked at construction");
        Ok(HittingFunction {
            solver: self,
            target,
            mu: v.iter().take(n).copied().collect(),
            c: v[n],
        })
    }

    /// Green function of the walk killed on the set, `E_x[# visits to y before τ̄]`.
    pub fn green(&self, x: Site, y: Site) -> f64 {
        self.green_from(x).eval(y)
    }

    /// `y ↦ G_S(x, y)` for a fixed `x`, sharing one solve across all `y`.
    pub fn green_from(&self, x: Site) -> GreenRow<'_> {
        let inside = self.set.contains(&x);
        let v = if inside {
            DVector::zeros(self.skin.len() + 1)
        } else {
            self.solve_from(x)
        };
        GreenRow {
            solver: self,
            x,
            inside,
            v,
        }
    }

    /// Limit as `|y| → ∞` of `P_y(S_τ̄ = x, S_{τ̄−1} = w)`, equal to `F_S(w)/4`.
    pub fn edge_from_infinity(&self, x: Site, w: Site) -> Result<f64> {
        if !x.is_adjacent(w) || !self.set.contains(&x) {
            return Err(Error::Precondition(format!(
                "{w} -> {x} is not an edge into the set"
            )));
        }
        if self.set.contains(&w) {
            return Ok(0.0);
        }
        Ok(self.escape_potential(w) / 4.0)
    }

    /// Average over starts `y` of `P_y(S_τ̄ = x, S_{τ̄−1} = w) = G(y, w)/4`,
    /// returned with the min and max over the starts.
    pub fn edge_from_starts(&self, x: Site, w: Site, starts: &[Site]) -> Result<(f64, f64, f64)> {
        self.edge_from_infinity(x, w)?;
        if self.set.contains(&w) || starts.is_empty() {
            return Ok((0.0, 0.0, 0.0));
        }
        let row = self.green_from(w);
        let vals: Vec<f64> = starts.iter().map(|&y| row.eval(y) / 4.0).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((mean, lo, hi))
    }
}

/// One row of the killed Green function.
pub struct GreenRow<'a> {
    solver: &'a FiniteSetSolver,
    x: Site,
    inside: bool,
    v: DVector<f64>,
}

impl GreenRow<'_> {
    pub fn eval(&self, y: Site) -> f64 {
        let s = self.solver;
        if self.inside || s.set.contains(&y) {
            return 0.0;
        }
        let n = s.skin.len();
        let spread: f64 = (0..n).map(|i| self.v[i] * s.kernel.a(s.skin[i] - y)).sum();
        spread - s.kernel.a(self.x - y) + self.v[n]
    }
}

/// `y ↦ P_y(S_τ̄ = target) = c + Σ_s μ_s a(y − s)`.
pub struct HittingFunction<'a> {
    solver: &'a FiniteSetSolver,
    target: Site,
    mu: Vec<f64>,
    c: f64,
}

impl HittingFunction<'_> {
    pub fn target(&self) -> Site {
        self.target
    }

    pub fn eval(&self, y: Site) -> f64 {
        if self.solver.set.contains(&y) {
            return if y == self.target { 1.0 } else { 0.0 };
        }
        let k = &self.solver.kernel;
        self.c
            + self
                .solver
                .skin
                .iter()
                .zip(&self.mu)
                .map(|(&s, &m)| m * k.a(y - s))
                .sum::<f64>()
    }
}

/// Harmonic measure from infinity of `set` via the equilibrium system.
pub fn hm_infinity(set: &SiteSet) -> Result<EquilibriumResult> {
    Ok(FiniteSetSolver::new(set)?.equilibrium())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::{hit_distribution, AbsorbingProblem};
    use crate::lattice::{segment, Window};

    fn set(sites: &[Site]) -> SiteSet {
        sites.iter().copied().collect()
    }

    #[test]
    fn single_site_and_segment_symmetry() {
        let r = hm_infinity(&set(&[Site::new(4, -2)])).unwrap();
        assert_eq!(r.mass(Site::new(4, -2)), 1.0);
        let d = set(&segment(10));
        let r = hm_infinity(&d).unwrap();
        let total: f64 = r.measure.iter().map(|(_, _, m)| m).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for k in 0..=10 {
            assert!((r.mass(Site::new(k, 0)) - r.mass(Site::new(-k, 0))).abs() < 1e-13);
        }
        assert!(r.robin_spread < 1e-10);
        assert!(r.mass(Site::new(10, 0)) > r.mass(Site::ORIGIN));
    }

    #[test]
    fn translation_invariance() {
        let base = set(&[
            Site::new(0, 0),
            Site::new(1, 0),
            Site::new(1, 1),
            Site::new(3, 2),
        ]);
        let shift = Site::new(-7, 11);
        let moved: SiteSet = base.iter().map(|&s| s + shift).collect();
        let a = hm_infinity(&base).unwrap();
        let b = hm_infinity(&moved).unwrap();
        for &s in &base {
            assert!((a.mass(s) - b.mass(s + shift)).abs() < 1e-12);
        }
    }

    #[test]
    fn robin_constant_grows_with_segment_length() {
        let mut last = f64::NEG_INFINITY;
        for n in [2, 5, 10, 20, 40] {
            let r = hm_infinity(&set(&segment(n))).unwrap().robin;
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn hitting_and_green_match_window_solver() {
        let d = set(&segment(3));
        let solver = FiniteSetSolver::new(&d).unwrap();
        let y = Site::new(1, 4);
        let h = solver.hitting_from(y);
        let w = Window::new(-400, 400, -400, 400).unwrap();
        let p = AbsorbingProblem::new(w)
            .with_class("D", segment(3))
            .unwrap();
        let dist = hit_distribution(y, &p).unwrap();
        let leak = dist.defect;
        for (i, &z) in solver.skin().iter().enumerate() {
            let m = dist.mass(z);
            assert!(
                h[i] >= m - 1e-10 && h[i] <= m + leak,
                "{z}: {} vs {m}",
                h[i]
            );
        }
        let f = solver.hitting_function(Site::new(-3, 0)).unwrap();
        let i = solver
            .skin()
            .iter()
            .position(|&s| s == Site::new(-3, 0))
            .unwrap();
        assert!((f.eval(y) - h[i]).abs() < 1e-12);
        assert_eq!(f.eval(Site::new(-3, 0)), 1.0);
        // Green function on a quarter of the starts: symmetric and positive.
        let (a, b) = (Site::new(2, 3), Site::new(-1, -2));
        assert!((solver.green(a, b) - solver.green(b, a)).abs() < 1e-10);
        assert!(solver.green(a, a) > 1.0);
    }

    #[test]
    fn edges_from_infinity_sum_to_site_mass() {
        let d = set(&segment(4));
        let solver = FiniteSetSolver::new(&d).unwrap();
        for x in d.iter().copied() {
            let sum: f64 = x
                .neighbors()
                .iter()
                .map(|&w| solver.edge_from_infinity(x, w).unwrap())
                .sum();
            assert!((sum - solver.hm(x)).abs() < 1e-12, "{x}");
        }
        let up = solver
            .edge_from_infinity(Site::ORIGIN, Site::new(0, 1))
            .unwrap();
        let down = solver
            .edge_from_infinity(Site::ORIGIN, Site::new(0, -1))
            .unwrap();
        assert!((up - down).abs() < 1e-13);
        let starts: Vec<Site> = (0..64)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 64.0;
                Site::new(
                    (3000.0 * t.cos()).round() as i64,
                    (3000.0 * t.sin()).round() as i64,
                )
            })
            .collect();
        let (mean, lo, hi) = solver
            .edge_from_starts(Site::new(4, 0), Site::new(5, 0), &starts)
            .unwrap();
        let lim = solver
            .edge_from_infinity(Site::new(4, 0), Site::new(5, 0))
            .unwrap();
        assert!(lo <= mean && mean <= hi);
        assert!((mean - lim).abs() < 2e-3 * lim);
    }

    #[test]
    fn sealed_hole_is_ignored() {
        let mut ring = SiteSet::new();
        for x1 in -2i64..=2 {
            for x2 in -2i64..=2 {
                if x1.abs() == 2 || x2.abs() == 2 {
                    ring.insert(Site::new(x1, x2));
                }
            }
        }
        let r = hm_infinity(&ring).unwrap();
        assert_eq!(r.measure.iter().count(), 16);
        assert!(r.min_raw_mass >= 0.0);
    }
}
