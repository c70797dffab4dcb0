//! Simple random walk simulation with deterministic parallel reduction.
//!
//! Work is split into streams of [`STREAM_SAMPLES`] walks; each stream owns a
//! ChaCha8 stream `(seed, stream)` and tallies integer counts, so merged
//! results do not depend on the number of worker threads.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{HalfPlaneSet, Site, SiteSet};

/// Walks simulated per RNG stream.
pub const STREAM_SAMPLES: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec { seed, stream: 0 }
    }

    /// The `i`-th sub-stream of this spec.
    pub fn substream(&self, i: u64) -> RngSpec {
        RngSpec {
            seed: self.seed,
            stream: self.stream.wrapping_mul(1 << 32).wrapping_add(i),
        }
    }

    pub fn walker(&self) -> Walker {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        Walker {
            rng,
            bits: 0,
            left: 0,
        }
    }
}

/// Source of uniform nearest-neighbour steps, two random bits per step.
pub struct Walker {
    rng: ChaCha8Rng,
    bits: u64,
    left: u32,
}

impl Walker {
    #[inline]
    pub fn step(&mut self) -> Site {
        if self.left == 0 {
            self.bits = self.rng.next_u64();
            self.left = 32;
        }
        let d = (self.bits & 3) as usize;
        self.bits >>= 2;
        self.left -= 1;
        Site::STEPS[d]
    }

    pub fn below(&mut self, n: u64) -> u64 {
        // Rejection keeps the draw exactly uniform.
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.rng.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Absorbed { at: Site, prev: Site, steps: u64 },
    Timeout,
}

/// Run one walk from `start` until it steps onto an absorbing site (at a
/// time `≥ 1`) or `cap` steps have been taken.
#[inline]
pub fn sample_walk<F: Fn(Site) -> bool>(
    start: Site,
    absorbing: &F,
    cap: u64,
    w: &mut Walker,
) -> Outcome {
    let mut pos = start;
    for t in 1..=cap {
        let next = pos + w.step();
        if absorbing(next) {
            return Outcome::Absorbed {
                at: next,
                prev: pos,
                steps: t,
            };
        }
        pos = next;
    }
    Outcome::Timeout
}

/// Monte Carlo estimate of a probability (or a scaled one).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub timeout_fraction: f64,
}

impl Estimate {
    /// Binomial estimate `hits / samples`.
    pub fn binomial(hits: u64, samples: u64, timeouts: u64) -> Self {
        let n = samples.max(1) as f64;
        let p = hits as f64 / n;
        Estimate {
            mean: p,
            std_error: (p * (1.0 - p) / n).sqrt(),
            n_samples: samples,
            timeout_fraction: timeouts as f64 / n,
        }
    }

    /// Estimate conditional on absorption, `hits / (samples − timeouts)`.
    pub fn conditional(hits: u64, samples: u64, timeouts: u64) -> Self {
        let decided = (samples - timeouts).max(1) as f64;
        let p = hits as f64 / decided;
        Estimate {
            mean: p,
            std_error: (p * (1.0 - p) / decided).sqrt(),
            n_samples: samples,
            timeout_fraction: timeouts as f64 / samples.max(1) as f64,
        }
    }

    pub fn scaled(self, k: f64) -> Self {
        Estimate {
            mean: self.mean * k,
            std_error: self.std_error * k.abs(),
            ..self
        }
    }

    /// Whether `value` lies within `k` standard errors (and a floor) of the mean.
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error + 1e-15
    }
}

/// Integer tallies of absorption sites, incoming edges and timeouts.
#[derive(Clone, Debug, Default)]
pub struct Tally {
    pub samples: u64,
    pub timeouts: u64,
    pub sites: BTreeMap<Site, u64>,
    pub edges: BTreeMap<(Site, Site), u64>,
}

impl Tally {
    pub fn hits(&self, s: Site) -> u64 {
        self.sites.get(&s).copied().unwrap_or(0)
    }

    pub fn edge_hits(&self, at: Site, prev: Site) -> u64 {
        self.edges.get(&(at, prev)).copied().unwrap_or(0)
    }

    pub fn estimate(&self, s: Site) -> Estimate {
        Estimate::binomial(self.hits(s), self.samples, self.timeouts)
    }

    pub fn absorbed(&self) -> u64 {
        self.samples - self.timeouts
    }
}

#[derive(Default)]
struct Partial {
    samples: u64,
    timeouts: u64,
    sites: HashMap<Site, u64>,
    edges: HashMap<(Site, Site), u64>,
}

/// Simulate `samples` walks with starts drawn by `start` and tally where they
/// are absorbed. Only sites accepted by `keep` are tallied (timeouts always are).
pub fn simulate<S, F, K>(
    samples: u64,
    spec: RngSpec,
    cap: u64,
    start: S,
    absorbing: &F,
    keep: K,
) -> Tally
where
    S: Fn(&mut Walker) -> Site + Sync,
    F: Fn(Site) -> bool + Sync,
    K: Fn(Site) -> bool + Sync,
{
    let streams = samples.div_ceil(STREAM_SAMPLES);
    let parts: Vec<Partial> = (0..streams)
        .into_par_iter()
        .map(|i| {
            let count = STREAM_SAMPLES.min(samples - i * STREAM_SAMPLES);
            let mut w = spec.substream(i).walker();
            let mut p = Partial {
                samples: count,
                ..Partial::default()
            };
            for _ in 0..count {
                let s = start(&mut w);
                match sample_walk(s, absorbing, cap, &mut w) {
                    Outcome::Absorbed { at, prev, .. } => {
                        if keep(at) {
                            *p.sites.entry(at).or_insert(0) += 1;
                            *p.edges.entry((at, prev)).or_insert(0) += 1;
                        }
                    }
                    Outcome::Timeout => p.timeouts += 1,
                }
            }
            p
        })
        .collect();
    let mut t = Tally::default();
    for p in parts {
        t.samples += p.samples;
        t.timeouts += p.timeouts;
        for (s, c) in p.sites {
            *t.sites.entry(s).or_insert(0) += c;
        }
        for (e, c) in p.edges {
            *t.edges.entry(e).or_insert(0) += c;
        }
    }
    t
}

/// `P(absorbed at target)` for walks from a fixed start (first step unconditional).
pub fn mc_hit<F>(
    start: Site,
    absorbing: &F,
    target: Site,
    samples: u64,
    cap: u64,
    spec: RngSpec,
) -> Estimate
where
    F: Fn(Site) -> bool + Sync,
{
    simulate(samples, spec, cap, |_| start, absorbing, |s| s == target).estimate(target)
}

/// Default cap `64·n²` for walks started at height `n`.
pub fn height_cap(n: i64) -> u64 {
    64 * (n as u64).pow(2)
}

/// `πn · P_{(0,n)}(S_τ̄ = x)` for the walk absorbed on `A ∪ L₀`.
pub fn mc_inharmonic(a: &HalfPlaneSet, n: i64, x: Site, samples: u64, spec: RngSpec) -> Estimate {
    let absorbing = |s: Site| a.contains(s);
    let start = Site::new(0, n);
    mc_hit(start, &absorbing, x, samples, height_cap(n), spec).scaled(PI * n as f64)
}

/// Exterior boundary of the discrete disc: sites at distance `≥ R` with a
/// neighbour at distance `< R`, in lexicographic order.
pub fn circle(r: i64) -> Vec<Site> {
    let r2 = r * r;
    let mut v = Vec::new();
    for x1 in -r - 1..=r + 1 {
        for x2 in -r - 1..=r + 1 {
            let s = Site::new(x1, x2);
            if s.norm_sq() >= r2 && s.neighbors().iter().any(|n| n.norm_sq() < r2) {
                v.push(s);
            }
        }
    }
    v
}

/// Harmonic-measure estimate from walks started uniformly on the circle of
/// radius `R`, with the per-edge split of the site estimate.
#[derive(Clone, Debug, Serialize)]
pub struct CircleEstimate {
    pub site: Estimate,
    pub edges: Vec<(Site, Estimate)>,
    pub radius: i64,
    pub cap: u64,
}

/// Walks from the uniform distribution on `∂ᵒᵘᵗB(0,R)` absorbed on `set`;
/// counts are conditioned on absorption before the cap (default `64R²`), and
/// the timeout fraction is reported alongside.
pub fn mc_hm_from_circle(
    set: &SiteSet,
    r: i64,
    x: Site,
    samples: u64,
    cap: Option<u64>,
    spec: RngSpec,
) -> CircleEstimate {
    let ring = circle(r);
    let cap = cap.unwrap_or(64 * (r as u64).pow(2));
    let absorbing = |s: Site| set.contains(&s);
    let t = simulate(
        samples,
        spec,
        cap,
        |w| ring[w.below(ring.len() as u64) as usize],
        &absorbing,
        |s| s == x,
    );
    let edges = x
        .neighbors()
        .iter()
        .map(|&p| {
            (
                p,
                Estimate::conditional(t.edge_hits(x, p), t.samples, t.timeouts),
            )
        })
        .collect();
    CircleEstimate {
        site: Estimate::conditional(t.hits(x), t.samples, t.timeouts),
        edges,
        radius: r,
        cap,
    }
}
