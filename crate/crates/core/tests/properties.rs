use proptest::prelude::*;

use knnfunc::catalog::{f_value, tail_envelope_with_epsilon, EstimatorFunction, FunctionalKind, FunctionalSpec};
use knnfunc::estimator::{estimate_single, estimate_two, Window};
use knnfunc::{Density, Family, KnnIndex, PointSet};

fn spec(s: &str) -> FunctionalSpec {
    s.parse().unwrap()
}

fn points(d: usize, max: usize) -> impl Strategy<Value = PointSet> {
    (12..max).prop_flat_map(move |m| {
        prop::collection::vec(-10.0..10.0f64, m * d).prop_map(move |c| PointSet::new(c, d).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kd_tree_matches_brute_force(pts in (1usize..=6).prop_flat_map(|d| points(d, 300)), k in 1usize..=10, leaf in 1usize..40) {
        let index = KnnIndex::with_leaf_size(&pts, leaf);
        for i in (0..pts.len()).step_by(7) {
            let q = pts.point(i);
            prop_assert_eq!(index.query(q, k, Some(i)).unwrap(), index.query_brute(q, k, Some(i)).unwrap());
            prop_assert_eq!(index.query(q, k, None).unwrap(), index.query_brute(q, k, None).unwrap());
        }
    }

    #[test]
    fn grid_ties_match_brute_force(c in prop::collection::vec(0u8..4, 2 * 150), k in 1usize..=10) {
        let pts = PointSet::new(c.into_iter().map(f64::from).collect(), 2).unwrap();
        let index = KnnIndex::with_leaf_size(&pts, 4);
        for i in 0..pts.len() {
            prop_assert_eq!(index.query(pts.point(i), k, Some(i)).unwrap(), index.query_brute(pts.point(i), k, Some(i)).unwrap());
        }
    }

    #[test]
    fn estimate_is_permutation_invariant(pts in points(2, 200), seed in any::<u64>(), k in 1usize..=6) {
        let n = pts.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let rows: Vec<Vec<f64>> = order.iter().map(|&i| pts.point(i).to_vec()).collect();
        let shuffled = PointSet::from_rows(&rows).unwrap();
        let h = spec("entropy");
        let a = estimate_single(&pts, &h, k, Window::UNBOUNDED).unwrap().value;
        let b = estimate_single(&shuffled, &h, k, Window::UNBOUNDED).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn kl_estimator_function_is_antisymmetric(lu in -8.0..8.0f64, lv in -8.0..8.0f64, k in 1usize..8, l in 1usize..8) {
        let kl = spec("kl");
        let (u, v) = (10f64.powf(lu), 10f64.powf(lv));
        let forward = EstimatorFunction::new(&kl, k, Some(l)).unwrap().eval(u, v);
        let backward = EstimatorFunction::new(&kl, l, Some(k)).unwrap().eval(v, u);
        prop_assert!((forward + backward).abs() <= 1e-12 * forward.abs().max(1.0));
        let (p, q) = (1.0 / u, 1.0 / v);
        prop_assert!((f_value(&kl, p, Some(q)).unwrap() + f_value(&kl, q, Some(p)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn jsd_vanishes_at_equal_densities(p in 1e-6..1e6f64) {
        prop_assert!(f_value(&spec("jsd"), p, Some(p)).unwrap().abs() < 1e-12);
    }
}

/// Envelopes read off the published bounds that do not cover the constant or logarithmic
/// part of `phi` on one side; see `literal_envelopes_miss_the_bounded_part`.
fn literal_only(spec: &FunctionalSpec) -> bool {
    matches!(
        spec.kind(),
        FunctionalKind::KullbackLeibler | FunctionalKind::Hellinger | FunctionalKind::GeneralizedBetaDivergence { .. }
    )
}

fn envelope_ratio(phi: &EstimatorFunction, spec: &FunctionalSpec, u: f64, v: f64) -> Option<f64> {
    let env = tail_envelope_with_epsilon(spec, 0.25);
    let p = phi.eval(u, v);
    p.is_finite().then(|| p.abs() / env.bound(u, v))
}

fn orders(spec: &FunctionalSpec) -> Vec<(usize, Option<usize>)> {
    let mut out = Vec::new();
    for k in [2usize, 4, 6] {
        for l in [3usize, 5] {
            let l = (spec.arity() == 2).then_some(l);
            if spec.check_orders(k, l).is_ok() && !out.contains(&(k, l)) {
                out.push((k, l));
            }
        }
    }
    out
}

/// `|phi| / (eta(u) eta~(v))` far out in the tails stays below 1.5 times its maximum on
/// the core `[1e-3, 1e3]^2`.
#[test]
fn envelopes_bound_the_tails() {
    let core: Vec<f64> = (-30..=30).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    let tails: Vec<f64> = (-120..=120).step_by(5).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    for s in FunctionalSpec::catalogue().into_iter().filter(|s| !literal_only(s)) {
        for (k, l) in orders(&s) {
            let phi = EstimatorFunction::new(&s, k, l).unwrap();
            let vs = |grid: &[f64]| if l.is_some() { grid.to_vec() } else { vec![1.0] };
            let sup = |grid: &[f64]| {
                let mut m: f64 = 0.0;
                for &u in grid {
                    for &v in &vs(grid) {
                        if let Some(r) = envelope_ratio(&phi, &s, u, v) {
                            m = m.max(r);
                        }
                    }
                }
                m
            };
            let (c, t) = (sup(&core), sup(&tails));
            assert!(t <= 1.5 * c, "{s} k={k} l={l:?}: tail ratio {t} vs core {c}");
        }
    }
}

#[test]
fn literal_envelopes_miss_the_bounded_part() {
    // KL and Hellinger as u -> 0, the generalized divergence as v -> 0.
    for (name, u, v) in [("kl", 1e-12, 1.0), ("hellinger", 1e-12, 1.0), ("gen-beta:3", 1.0, 1e-12)] {
        let s = spec(name);
        let phi = EstimatorFunction::new(&s, 4, Some(4)).unwrap();
        let near = envelope_ratio(&phi, &s, 1.0, 1.0).unwrap();
        let far = envelope_ratio(&phi, &s, u, v).unwrap();
        assert!(far > 100.0 * near, "{name}: {far} vs {near}");
    }
}

#[test]
fn jsd_estimate_near_zero_for_equal_densities() {
    let p = Density::new(Family::TruncatedGaussian { radius: 3.0, scale: 1.0 }, 2).unwrap();
    for seed in 0..3 {
        let x = p.sample_stream(3000, seed, 0).unwrap();
        let y = p.sample_stream(3000, seed, 1).unwrap();
        let e = estimate_two(&x, &y, &spec("jsd"), 4, 4, Window::UNBOUNDED, Window::UNBOUNDED).unwrap();
        assert!(e.value.abs() < 0.03, "seed {seed}: {}", e.value);
    }
}
