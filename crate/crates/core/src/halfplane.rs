//! Exact hitting quantities for the walk absorbed on `L₀ ∪ K` with `K` a
//! finite set of sites at positive height.
//!
//! The Green function of the half plane killed on `L₀` is
//! `G_H(x, y) = a(x − ȳ) − a(x − y)` with `ȳ` the mirror image of `y` across
//! `L₀`. Absorption on `K` is added through the SPD matrix `M = [G_H(k, k')]`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::lattice::{HalfPlaneSet, Site, SiteSet};
use crate::potential::{shared_kernel, PotentialKernel};

/// Largest decoration accepted by the dense factorization.
pub const MAX_DECORATION: usize = 6000;

pub struct HalfPlaneSolver {
    kernel: Arc<PotentialKernel>,
    k: Vec<Site>,
    kset: SiteSet,
    chol: Option<Cholesky<f64, Dyn>>,
}

/// `y ↦ P_y(S_τ̄ = x, S_{τ̄−1} = w)` for a fixed edge `w → x`.
pub struct EdgeProbe<'a> {
    solver: &'a HalfPlaneSolver,
    w: Site,
    rho: Vec<f64>,
}

impl EdgeProbe<'_> {
    pub fn eval(&self, y: Site) -> f64 {
        if self.solver.is_absorbing(y) {
            return 0.0;
        }
        let s = self.solver;
        let corr: f64 =
            s.k.iter()
                .zip(&self.rho)
                .map(|(&k, &r)| r * s.gh(y, k))
                .sum();
        (s.gh(y, self.w) - corr) / 4.0
    }
}

impl HalfPlaneSolver {
    pub fn new(decoration: &[Site]) -> Result<Self> {
        let kset: SiteSet = decoration.iter().copied().collect();
        if let Some(s) = kset.iter().find(|s| s.x2 < 1) {
            return Err(Error::Precondition(format!(
                "decoration site {s} below height 1"
            )));
        }
        if kset.len() > MAX_DECORATION {
            return Err(Error::SizeGuard {
                size: kset.len(),
                max: MAX_DECORATION,
            });
        }
        let k: Vec<Site> = kset.iter().copied().collect();
        let reach = k.iter().map(|s| s.x1.abs().max(s.x2)).max().unwrap_or(0);
        let kernel = shared_kernel(2 * reach + 64)?;
        let mut solver = HalfPlaneSolver {
            kernel,
            k,
            kset,
            chol: None,
        };
        let n = solver.k.len();
        if n > 0 {
            let m = DMatrix::from_fn(n, n, |i, j| solver.gh(solver.k[i], solver.k[j]));
            solver.chol = Some(Cholesky::new(m).ok_or_else(|| {
                Error::Singular("half-plane Green matrix not positive definite".into())
            })?);
        }
        Ok(solver)
    }

    /// Solver for the sites of `a` above `L₀` within horizontal reach.
    pub fn for_set(a: &HalfPlaneSet, reach: i64) -> Result<Self> {
        Self::new(&a.sites_above_l0(reach))
    }

    pub fn decoration(&self) -> &[Site] {
        &self.k
    }

    pub fn is_absorbing(&self, s: Site) -> bool {
        s.x2 <= 0 || self.kset.contains(&s)
    }

    /// Green function of the half plane killed on `L₀`.
    #[inline]
    pub fn gh(&self, x: Site, y: Site) -> f64 {
        if x.x2 <= 0 || y.x2 <= 0 {
            return 0.0;
        }
        self.kernel.a(x - y.reflect()) - self.kernel.a(x - y)
    }

    fn solve_k(&self, rhs: Vec<f64>) -> Vec<f64> {
        match &self.chol {
            Some(c) => c.solve(&DVector::from_vec(rhs)).iter().copied().collect(),
            None => Vec::new(),
        }
    }

    /// `P_x(S_τ̄ = k)` for every decoration site `k`, in decoration order.
    pub fn k_hits(&self, x: Site) -> Vec<f64> {
        self.solve_k(self.k.iter().map(|&k| self.gh(x, k)).collect())
    }

    /// Expected visits to `y` before absorption on `L₀ ∪ K`, started at `x`.
    pub fn green(&self, x: Site, y: Site) -> f64 {
        if self.is_absorbing(x) || self.is_absorbing(y) {
            return 0.0;
        }
        let u = self.k_hits(x);
        self.gh(x, y)
            - self
                .k
                .iter()
                .zip(&u)
                .map(|(&k, &p)| p * self.gh(k, y))
                .sum::<f64>()
    }

    pub fn edge_probe(&self, x: Site, w: Site) -> Result<EdgeProbe<'_>> {
        if !x.is_adjacent(w) || !self.is_absorbing(x) {
            return Err(Error::Precondition(format!(
                "{w} -> {x} is not an edge into the absorbing set"
            )));
        }
        let rho = if self.is_absorbing(w) {
            Vec::new()
        } else {
            self.solve_k(self.k.iter().map(|&k| self.gh(k, w)).collect())
        };
        Ok(EdgeProbe {
            solver: self,
            w,
            rho,
        })
    }

    /// Free neighbours of an absorbing site: the possible previous sites.
    pub fn incoming(&self, x: Site) -> Vec<Site> {
        x.neighbors()
            .into_iter()
            .filter(|&w| w.x2 >= 1 && !self.kset.contains(&w))
            .collect()
    }

    /// `P_y(S_τ̄ = x)` for absorbing `x` (incoming edges from above the line only).
    pub fn hit(&self, y: Site, x: Site) -> Result<f64> {
        if self.is_absorbing(y) {
            return Ok(if y == x { 1.0 } else { 0.0 });
        }
        let mut total = 0.0;
        for w in self.incoming(x) {
            total += self.edge_probe(x, w)?.eval(y);
        }
        Ok(total)
    }

    /// Stationary edge measure `H̄_{A,m}(w → x) = min(w₂, m) − Σ_k P_w(S_τ̄ = k) min(k₂, m)`.
    pub fn stationary_edge(&self, x: Site, w: Site, m: i64) -> Result<f64> {
        if !x.is_adjacent(w) || !self.is_absorbing(x) {
            return Err(Error::Precondition(format!(
                "{w} -> {x} is not an edge into the absorbing set"
            )));
        }
        if self.is_absorbing(w) {
            return Ok(0.0);
        }
        let u = self.k_hits(w);
        let lost: f64 = self
            .k
            .iter()
            .zip(&u)
            .map(|(k, p)| p * k.x2.min(m) as f64)
            .sum();
        Ok(w.x2.min(m) as f64 - lost)
    }

    /// `H̄_{A,m}(x)`: expected visits to `L_m ∖ A` of the walk kicked from `x`.
    pub fn stationary(&self, x: Site, m: i64) -> Result<f64> {
        let mut total = 0.0;
        for w in self.incoming(x) {
            total += self.stationary_edge(x, w, m)?;
        }
        Ok(total)
    }

    /// `Σ_{y ∈ L_m ∖ A, |y₁| ≤ half} P_y(S_τ̄ = x)`.
    pub fn line_sum(&self, x: Site, m: i64, half: i64) -> Result<f64> {
        let probes: Vec<EdgeProbe> = self
            .incoming(x)
            .into_iter()
            .map(|w| self.edge_probe(x, w))
            .collect::<Result<_>>()?;
        let mut total = 0.0;
        for y1 in -half..=half {
            let y = Site::new(x.x1 + y1, m);
            if self.is_absorbing(y) {
                continue;
            }
            total += probes.iter().map(|p| p.eval(y)).sum::<f64>();
        }
        Ok(total)
    }
}
