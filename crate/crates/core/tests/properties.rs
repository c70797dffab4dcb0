use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use proptest::prelude::*;

use halfplane_hm::dirichlet::{hit_distribution, rational_exit, AbsorbingProblem};
use halfplane_hm::measures::{stationary_hm, truncated_solver, Method};
use halfplane_hm::montecarlo::{mc_hm_from_circle, RngSpec};
use halfplane_hm::potential::hm_infinity;
use halfplane_hm::{HalfPlaneSet, Site, SiteSet, Window};

fn site_in(r: i64) -> impl Strategy<Value = Site> {
    (-r..=r, -r..=r).prop_map(|(a, b)| Site::new(a, b))
}

fn small_set() -> impl Strategy<Value = SiteSet> {
    prop::collection::btree_set(site_in(4), 2..8).prop_map(|s| s.into_iter().collect())
}

fn decoration() -> impl Strategy<Value = Vec<Site>> {
    prop::collection::btree_set(
        (-4i64..=4, 1i64..=3).prop_map(|(a, b)| Site::new(a, b)),
        0..5,
    )
    .prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hitting_masses_are_a_subprobability(
        half in 2i64..6,
        inner in prop::collection::btree_set(site_in(5), 0..6),
        start in site_in(5),
    ) {
        let w = Window::new(-half, half, -half, half).unwrap();
        let inner: BTreeSet<Site> = inner.into_iter().filter(|s| w.contains(*s) && *s != start).collect();
        prop_assume!(w.contains(start));
        let p = AbsorbingProblem::new(w).with_class("inner", inner.iter().copied()).unwrap();
        let d = hit_distribution(start, &p).unwrap();
        for (_, _, m) in d.iter() {
            prop_assert!(m >= -1e-12);
        }
        prop_assert!((d.total() + d.defect - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn rational_and_float_exits_agree(n in 2i64..=6, a in -5i64..=5, b in 1i64..=5) {
        prop_assume!(a.abs() < n && b < n);
        let start = Site::new(a, b);
        let exact = rational_exit(n, start).unwrap();
        let w = Window::new(-n + 1, n - 1, 1, n - 1).unwrap();
        let p = AbsorbingProblem::new(w)
            .with_line("up", n).unwrap()
            .with_line("bottom", 0).unwrap()
            .with_class("left", (1..n).map(|x2| Site::new(-n, x2))).unwrap()
            .with_class("right", (1..n).map(|x2| Site::new(n, x2))).unwrap();
        let d = hit_distribution(start, &p).unwrap();
        for class in ["up", "bottom", "left", "right"] {
            let q = exact.class(class).to_f64().unwrap();
            prop_assert!((q - d.class_mass(class)).abs() <= 1e-10, "{class}: {q} vs {}", d.class_mass(class));
        }
    }

    #[test]
    fn harmonic_measure_from_infinity_is_rigid(set in small_set(), dx in -20i64..20, dy in -20i64..20) {
        let base = hm_infinity(&set).unwrap();
        let shift = Site::new(dx, dy);
        let moved: SiteSet = set.iter().map(|&s| s + shift).collect();
        let mirrored: SiteSet = set.iter().map(|s| s.mirror()).collect();
        let hm_moved = hm_infinity(&moved).unwrap();
        let hm_mirrored = hm_infinity(&mirrored).unwrap();
        for &s in &set {
            prop_assert!((base.mass(s) - hm_moved.mass(s + shift)).abs() <= 1e-9);
            prop_assert!((base.mass(s) - hm_mirrored.mass(s.mirror())).abs() <= 1e-9);
        }
        prop_assert!((base.measure.total() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn truncated_masses_sum_to_one(deco in decoration(), n in 6i64..24) {
        let a = HalfPlaneSet::with_sites(deco).unwrap();
        let solver = truncated_solver(&a, n).unwrap();
        let total: f64 = solver.set().iter().map(|&s| solver.hm(s)).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert!(solver.set().iter().all(|&s| solver.hm(s) >= -1e-12));
    }

    #[test]
    fn stationary_measure_does_not_depend_on_the_line(deco in decoration(), pick in 0usize..16, extra in 1i64..6) {
        let a = HalfPlaneSet::with_sites(deco.clone()).unwrap();
        let x = if deco.is_empty() { Site::new(pick as i64 - 8, 0) } else { deco[pick % deco.len()] };
        let m = a.max_height(20) + 2;
        let lo = stationary_hm(&a, x, m, Method::VisitsGreen, None).unwrap();
        let hi = stationary_hm(&a, x, m + extra, Method::VisitsGreen, None).unwrap();
        prop_assert!((lo.value - hi.value).abs() <= 1e-8, "{} vs {}", lo.value, hi.value);
        let ls = stationary_hm(&a, x, m, Method::LineSum, None).unwrap();
        prop_assert!(ls.bracket.lo <= lo.value + 1e-9 && lo.value <= ls.bracket.hi + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn circle_edges_partition_the_site_count(set in small_set(), seed in any::<u64>()) {
        let x = *set.iter().next().unwrap();
        let est = mc_hm_from_circle(&set, 8, x, 2000, None, RngSpec::new(seed));
        let sum: f64 = est.edges.iter().map(|(_, e)| e.mean).sum();
        prop_assert!((sum - est.site.mean).abs() <= 1e-12);
    }
}
