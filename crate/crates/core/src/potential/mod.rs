//! Potential kernel `a(x) = Σ_n [P₀(S_n = 0) − P₀(S_n = x)]` of planar simple
//! random walk, and harmonic measure from infinity of finite sets through the
//! logarithmic equilibrium system.

pub mod equilibrium;
pub(crate) mod exact;

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::dirichlet::{self, AbsorbingProblem, Bracket};
use crate::error::{Error, Result};
use crate::lattice::{Site, Window};

pub use equilibrium::{hm_infinity, EquilibriumResult, FiniteSetSolver, GreenRow, HittingFunction};

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest radius the shared cache will grow to.
pub const MAX_KERNEL_RADIUS: i64 = 2048;

/// Magic bytes of the flat kernel file.
pub const KERNEL_MAGIC: &[u8; 8] = b"HHAKERN1";

/// Slope of the logarithmic growth, `a(x) ≈ (2/π) ln‖x‖ + κ`.
pub const LOG_SLOPE: f64 = 2.0 / PI;

/// `κ = (2γ + ln 8)/π`, the additive constant of the expansion.
pub fn kappa() -> f64 {
    (2.0 * EULER_GAMMA + 8f64.ln()) / PI
}

/// Asymptotic expansion `(2/π) ln‖x‖ + κ − cos(4φ)/(6π‖x‖²)`; error `O(‖x‖⁻⁴)`.
pub fn asymptotic(x: Site) -> f64 {
    if x == Site::ORIGIN {
        return 0.0;
    }
    let r2 = x.norm_sq() as f64;
    let (a, b) = (x.x1 as f64, x.x2 as f64);
    let cos4 = (a.powi(4) - 6.0 * a * a * b * b + b.powi(4)) / (r2 * r2);
    LOG_SLOPE * 0.5 * r2.ln() + kappa() - cos4 / (6.0 * PI * r2)
}

/// Cached exact values of `a` on the square `[-R,R]²` (stored as one octant).
#[derive(Clone, Debug)]
pub struct PotentialKernel {
    radius: i64,
    octant: Vec<f64>,
}

impl PotentialKernel {
    pub fn build(radius: i64) -> Result<Self> {
        if radius > MAX_KERNEL_RADIUS {
            return Err(Error::KernelBudget {
                requested: radius,
                max: MAX_KERNEL_RADIUS,
            });
        }
        let radius = radius.max(2);
        log::debug!("building potential kernel to radius {radius}");
        Ok(PotentialKernel {
            radius,
            octant: exact::octant(radius as usize),
        })
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    fn slot(&self, x: Site) -> Option<usize> {
        let (p, q) = (x.x1.abs(), x.x2.abs());
        let (i, j) = if p >= q { (p, q) } else { (q, p) };
        (i <= self.radius).then(|| (i * (i + 1) / 2 + j) as usize)
    }

    /// Exact cached value, `None` outside the cache.
    pub fn get(&self, x: Site) -> Option<f64> {
        self.slot(x).map(|i| self.octant[i])
    }

    /// Cached value, or the asymptotic expansion beyond the cache radius.
    #[inline]
    pub fn a(&self, x: Site) -> f64 {
        match self.slot(x) {
            Some(i) => self.octant[i],
            None => asymptotic(x),
        }
    }

    /// Largest `|E_x[a(S₁)] − a(x) − δ(x,0)|` over the cache interior.
    pub fn harmonicity_residual(&self) -> f64 {
        let r = self.radius - 1;
        let mut worst = 0.0f64;
        for i in 0..=r {
            for j in 0..=i {
                let x = Site::new(i, j);
                let mean = x.neighbors().iter().map(|&y| self.a(y)).sum::<f64>() / 4.0;
                let delta = if x == Site::ORIGIN { 1.0 } else { 0.0 };
                worst = worst.max((mean - self.a(x) - delta).abs());
            }
        }
        worst
    }

    /// Write the kernel as magic, radius (u64 LE), then `(2R+1)²` f64 LE values
    /// row-major with `x2` outer and `x1` inner, both from `-R` to `R`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        let r = self.radius;
        let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
        write(KERNEL_MAGIC)?;
        write(&(r as u64).to_le_bytes())?;
        for x2 in -r..=r {
            for x1 in -r..=r {
                write(&self.a(Site::new(x1, x2)).to_le_bytes())?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rd = BufReader::new(f);
        let mut magic = [0u8; 8];
        rd.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != KERNEL_MAGIC {
            return Err(Error::Precondition(format!(
                "{} is not a potential kernel file",
                path.display()
            )));
        }
        let mut buf = [0u8; 8];
        rd.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
        let r = u64::from_le_bytes(buf) as i64;
        if r > MAX_KERNEL_RADIUS {
            return Err(Error::KernelBudget {
                requested: r,
                max: MAX_KERNEL_RADIUS,
            });
        }
        let mut octant = vec![0.0; ((r + 1) * (r + 2) / 2) as usize];
        for x2 in -r..=r {
            for x1 in -r..=r {
                rd.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
                if x1 >= x2 && x2 >= 0 {
                    octant[(x1 * (x1 + 1) / 2 + x2) as usize] = f64::from_le_bytes(buf);
                }
            }
        }
        Ok(PotentialKernel { radius: r, octant })
    }
}

static SHARED: Mutex<Option<Arc<PotentialKernel>>> = Mutex::new(None);

/// Process-wide kernel covering at least `radius`, grown on demand.
pub fn shared_kernel(radius: i64) -> Result<Arc<PotentialKernel>> {
    let mut slot = SHARED.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(k) = slot.as_ref() {
        if k.radius() >= radius {
            return Ok(Arc::clone(k));
        }
    }
    let current = slot.as_ref().map_or(0, |k| k.radius());
    let target = radius
        .max(current + current / 2)
        .max(64)
        .min(MAX_KERNEL_RADIUS.max(radius));
    let target = (target + 63) / 64 * 64;
    let k = Arc::new(PotentialKernel::build(
        target.min(MAX_KERNEL_RADIUS).max(radius),
    )?);
    *slot = Some(Arc::clone(&k));
    Ok(k)
}

/// `a(x)` with the shared cache extended as needed.
pub fn potential_a(x: Site) -> Result<f64> {
    let r = x.x1.abs().max(x.x2.abs());
    Ok(shared_kernel(r)?.a(x))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct C0Fit {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub sites: usize,
}

/// Statistics of `a(x) − (2/π) ln‖x‖` over sites with `lo ≤ ‖x‖ ≤ hi`.
pub fn fit_c0(kernel: &PotentialKernel, lo: f64, hi: f64) -> Result<C0Fit> {
    if lo < 20.0 || hi < lo {
        return Err(Error::Precondition(format!(
            "c0 fit band [{lo}, {hi}] must satisfy 20 <= lo <= hi"
        )));
    }
    if hi.ceil() as i64 > kernel.radius() {
        return Err(Error::Precondition(format!(
            "c0 fit band reaches {hi} beyond kernel radius {}",
            kernel.radius()
        )));
    }
    let r = hi.ceil() as i64;
    let (mut min, mut max, mut sum, mut count) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    // One octant suffices by symmetry.
    for i in 0..=r {
        for j in 0..=i {
            let x = Site::new(i, j);
            let norm = x.norm();
            if norm < lo || norm > hi {
                continue;
            }
            let v = kernel.a(x) - LOG_SLOPE * norm.ln();
            min = min.min(v);
            max = max.max(v);
            sum += v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Precondition("empty c0 fit band".into()));
    }
    Ok(C0Fit {
        mean: sum / count as f64,
        min,
        max,
        spread: max - min,
        sites: count,
    })
}

/// Bracket on `P₀(τ_x < τ₀)` from window solves of growing size, together
/// with the exact value `1/(2a(x))` for reference.
#[derive(Clone, Debug, Serialize)]
pub struct ReturnVsHit {
    pub bracket: Bracket,
    pub half_width: i64,
    pub exact: f64,
}

/// `P₀(τ_x < τ₀)`: kick-started solve with classes `{x}` and `{0}`, window
/// half-widths taken from `schedule` until the bracket is narrower than `tol`.
pub fn return_vs_hit(x: Site, schedule: &[i64], tol: f64) -> Result<ReturnVsHit> {
    if x == Site::ORIGIN {
        return Err(Error::Precondition("x must differ from the origin".into()));
    }
    let exact = 1.0 / (2.0 * potential_a(x)?);
    let mut last = None;
    for &w in schedule {
        let reach = w.max(x.x1.abs().max(x.x2.abs()) + 1);
        let window = Window::new(-reach, reach, -reach, reach)?;
        let problem = AbsorbingProblem::new(window)
            .with_class("target", [x])?
            .with_class("origin", [Site::ORIGIN])?;
        let dist = dirichlet::kick_start(Site::ORIGIN, &problem)?;
        let p = dist.class_mass("target");
        let bracket = Bracket::new(p, p, p + dist.defect);
        last = Some(ReturnVsHit {
            bracket,
            half_width: reach,
            exact,
        });
        if dist.defect <= tol {
            break;
        }
    }
    last.ok_or_else(|| Error::Precondition("empty window schedule".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: `a(x) = (2/π) ∫₀^π (1 − cos(x1 θ) β^{|x2|}) / √(b²−1) dθ`
    /// with `b = 2 − cos θ`, `β = b − √(b²−1)`, by composite Gauss–Legendre.
    fn a_by_quadrature(x: Site) -> f64 {
        let (nodes, weights) = gauss_legendre(24);
        let panels = 8 + 2 * (x.x1.abs() + x.x2.abs()) as usize;
        let h = PI / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = p as f64 * h;
            for (t, w) in nodes.iter().zip(&weights) {
                let th = lo + 0.5 * h * (t + 1.0);
                let b = 2.0 - th.cos();
                let s = ((1.0 - th.cos()) * (3.0 - th.cos())).sqrt();
                let beta = b - s;
                let f = (1.0 - (x.x1 as f64 * th).cos() * beta.powi(x.x2.abs() as i32)) / s;
                total += 0.5 * h * w * f;
            }
        }
        2.0 / PI * total
    }

    fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut xs = vec![0.0; n];
        let mut ws = vec![0.0; n];
        for i in 0..n {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-15 {
                    let (mut p0, mut p1) = (1.0, z);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                    xs[i] = z;
                    ws[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                    break;
                }
            }
        }
        (xs, ws)
    }

    #[test]
    fn quadrature_oracle_confirms_seed_values() {
        assert!((a_by_quadrature(Site::new(1, 0)) - 1.0).abs() < 1e-12);
        assert!((a_by_quadrature(Site::new(1, 1)) - 4.0 / PI).abs() < 1e-12);
        assert!(a_by_quadrature(Site::ORIGIN).abs() < 1e-14);
    }

    #[test]
    fn exact_table_matches_quadrature() {
        let k = PotentialKernel::build(40).unwrap();
        for x in [
            (0, 0),
            (1, 0),
            (1, 1),
            (3, 2),
            (7, 0),
            (12, 5),
            (25, 25),
            (40, 3),
            (31, 17),
        ] {
            let x = Site::from(x);
            let q = a_by_quadrature(x);
            assert!((k.a(x) - q).abs() < 1e-11, "{x}: {} vs {q}", k.a(x));
        }
    }

    #[test]
    fn symmetries_and_seeds() {
        let k = PotentialKernel::build(30).unwrap();
        assert_eq!(k.a(Site::ORIGIN), 0.0);
        for s in Site::STEPS {
            assert_eq!(k.a(s), 1.0);
        }
        for (a, b) in [(3, 7), (11, 2), (0, 9)] {
            let v = k.a(Site::new(a, b));
            for w in [(-a, b), (a, -b), (-a, -b), (b, a), (-b, a)] {
                assert_eq!(k.a(Site::from(w)), v);
            }
        }
    }

    #[test]
    fn harmonic_on_the_cache() {
        let k = PotentialKernel::build(120).unwrap();
        assert!(k.harmonicity_residual() <= 1e-10);
    }

    #[test]
    fn asymptotic_form_agrees_far_out() {
        let k = PotentialKernel::build(300).unwrap();
        for x in [(100, 0), (120, 45), (210, 210), (300, 17), (64, 64)] {
            let x = Site::from(x);
            let err = (k.a(x) - asymptotic(x)).abs();
            let bound = 1.0 / (x.norm_sq() as f64).powi(2);
            assert!(err < bound, "{x}: err {err:e} bound {bound:e}");
        }
    }

    #[test]
    fn c0_fit_bands() {
        let k = PotentialKernel::build(200).unwrap();
        let all = fit_c0(&k, 50.0, 200.0).unwrap();
        assert!(all.spread <= 1e-3, "{all:?}");
        let inner = fit_c0(&k, 50.0, 100.0).unwrap();
        let outer = fit_c0(&k, 100.0, 200.0).unwrap();
        assert!((inner.mean - outer.mean).abs() < 1e-4);
        assert!((all.mean - kappa()).abs() < 1e-4);
        // Axis and diagonal at radius ~100 differ by the ‖x‖⁻² envelope only.
        let axis = k.a(Site::new(100, 0)) - LOG_SLOPE * 100f64.ln();
        let d = Site::new(71, 71);
        let diag = k.a(d) - LOG_SLOPE * d.norm().ln();
        assert!((axis - diag).abs() < 2.0 / 1e4);
        assert!(fit_c0(&k, 10.0, 50.0).is_err());
    }

    #[test]
    fn kernel_file_roundtrip() {
        let k = PotentialKernel::build(20).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bin");
        k.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], KERNEL_MAGIC);
        assert_eq!(bytes.len(), 16 + 41 * 41 * 8);
        let back = PotentialKernel::load(&path).unwrap();
        assert_eq!(back.radius(), 20);
        for x in Window::new(-20, 20, -20, 20).unwrap().sites() {
            assert_eq!(back.a(x), k.a(x));
        }
    }

    #[test]
    fn return_vs_hit_brackets_exact_value() {
        let r = return_vs_hit(Site::new(1, 0), &[16, 32], 1e-9).unwrap();
        assert!(r.bracket.lo >= 0.25);
        assert!(r.bracket.contains(r.exact), "{r:?}");
        assert!((r.exact - 0.5).abs() < 1e-15);
        let left = return_vs_hit(Site::new(-3, 2), &[24], 1.0).unwrap();
        let right = return_vs_hit(Site::new(3, -2), &[24], 1.0).unwrap();
        assert!((left.bracket.lo - right.bracket.lo).abs() < 1e-9);
    }
}
