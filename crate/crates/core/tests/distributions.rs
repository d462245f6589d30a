use knnfunc::distributions::{monte_carlo_functional, true_functional, true_functional_with, OracleMethod};
use knnfunc::{Density, Family, FunctionalSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(s: &str) -> FunctionalSpec {
    s.parse().unwrap()
}

fn density(s: &str, d: usize) -> Density {
    Density::new(s.parse().unwrap(), d).unwrap()
}

struct GoldenRow {
    functional: String,
    density1: String,
    density2: String,
    d: usize,
    value: f64,
    tolerance: f64,
}

fn golden() -> Vec<GoldenRow> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/golden.csv");
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        ["functional", "density1", "density2", "d", "value", "tolerance", "oracle"]
    );
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            GoldenRow {
                functional: rec[0].to_string(),
                density1: rec[1].to_string(),
                density2: rec[2].to_string(),
                d: rec[3].parse().unwrap(),
                value: rec[4].parse().unwrap(),
                tolerance: rec[5].parse().unwrap(),
            }
        })
        .collect()
}

#[test]
fn oracle_matches_golden_file() {
    for row in golden() {
        let p = density(&row.density1, row.d);
        let q = (!row.density2.is_empty()).then(|| density(&row.density2, row.d));
        let t = true_functional(&spec(&row.functional), &p, q.as_ref()).unwrap();
        let allowed = row.tolerance + 3.0 * t.error.max(0.0);
        assert!(
            (t.value - row.value).abs() <= allowed,
            "{} {} {} d={}: got {} ({:?}), golden {}",
            row.functional,
            row.density1,
            row.density2,
            row.d,
            t.value,
            t.method,
            row.value
        );
    }
}

#[test]
fn monte_carlo_agrees_with_quadrature_in_one_dimension() {
    for row in golden().into_iter().filter(|r| r.d == 1) {
        let p = density(&row.density1, 1);
        let q = (!row.density2.is_empty()).then(|| density(&row.density2, 1));
        let s = spec(&row.functional);
        let quad = true_functional(&s, &p, q.as_ref()).unwrap();
        let mc = monte_carlo_functional(&s, &p, q.as_ref(), 400_000, 11).unwrap();
        assert!(
            (quad.value - mc.value).abs() <= 3.0 * mc.error + 1e-12,
            "{}: quadrature {} vs Monte Carlo {} +- {}",
            row.functional,
            quad.value,
            mc.value,
            mc.error
        );
    }
}

#[test]
fn slice_and_reduced_oracles_agree() {
    let cases = [
        ("entropy", "tcauchy:3", None),
        ("entropy", "texp:4", None),
        ("entropy", "tlaplace:3", None),
        ("kl", "tgauss:3", Some("tgauss:3,1.4142135623730951")),
        ("chi2", "texp:4", Some("tlaplace:3")),
    ];
    for (f, a, b) in cases {
        let p = density(a, 2);
        let q = b.map(|b| density(b, 2));
        let reduced = true_functional(&spec(f), &p, q.as_ref()).unwrap();
        let sliced = true_functional_with(&spec(f), &p, q.as_ref(), OracleMethod::Slice).unwrap();
        assert!((reduced.value - sliced.value).abs() < 1e-8, "{f} {a}: {reduced:?} vs {sliced:?}");
    }
}

#[test]
fn pdfs_integrate_to_one_by_quadrature() {
    // f = p^0 e^0 = 1, so the functional is the total mass.
    let mass = spec("gen-entropy:1,0");
    for d in 1..=2 {
        for f in Family::defaults(d) {
            let p = Density::new(f, d).unwrap();
            let t = true_functional_with(&mass, &p, None, OracleMethod::Slice).unwrap();
            assert!((t.value - 1.0).abs() < 1e-6, "{f} d={d}: {}", t.value);
        }
    }
}

#[test]
fn pdfs_integrate_to_one_by_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in 3..=6 {
        for f in Family::defaults(d) {
            let p = Density::new(f, d).unwrap();
            let (lo, hi) = match f {
                Family::TruncatedGaussian { radius, scale } => (-radius * scale, radius * scale),
                Family::TruncatedLaplace { radius } | Family::TruncatedCauchy { radius } => (-radius, radius),
                Family::TruncatedExponential { radius } => (0.0, radius),
                Family::UniformBox { side } => (0.0, side),
            };
            let vol = (hi - lo).powi(d as i32);
            let n = 400_000;
            let mut x = vec![0.0; d];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                x.iter_mut().for_each(|v| *v = rng.gen_range(lo..hi));
                let w = p.pdf(&x) * vol;
                s += w;
                s2 += w * w;
            }
            let mean = s / n as f64;
            let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
            assert!((mean - 1.0).abs() <= 3.0 * se + 1e-12, "{f} d={d}: {mean} +- {se}");
        }
    }
}

#[test]
fn exponential_integral_bound_holds() {
    for d in 1..=3 {
        for f in Family::defaults(d) {
            let p = Density::new(f, d).unwrap();
            let c = p.smoothness_class();
            for beta in [2.0, 5.0, 10.0] {
                let s = spec(&format!("gen-entropy:1,{beta}"));
                let lhs = true_functional(&s, &p, None).unwrap().value;
                let rhs = c.c0 * (-c.c1 * beta).exp();
                assert!(lhs <= rhs * (1.0 + 1e-9), "{f} d={d} beta={beta}: {lhs} > {rhs}");
            }
        }
    }
}

#[test]
fn sample_mean_is_centred() {
    let p = density("tgauss:3", 2);
    let m = 10_000;
    let xs = p.sample(m, 2024).unwrap();
    for j in 0..2 {
        let mean: f64 = xs.iter().map(|x| x[j]).sum::<f64>() / m as f64;
        assert!(mean.abs() <= 4.0 / (m as f64).sqrt(), "coordinate {j}: {mean}");
    }
    let u = density("uniform:1", 3).sample(100, 1).unwrap();
    assert!(u.as_flat().iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn scaled_gaussian_samples_match_scale() {
    let c = std::f64::consts::SQRT_2;
    let p = Density::new(Family::TruncatedGaussian { radius: 3.0, scale: c }, 3).unwrap();
    let xs = p.sample(20_000, 5).unwrap();
    assert!(xs.iter().all(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt() <= 3.0 * c));
    // Per-coordinate second moment: c^2 P(5/2, 9/2) / P(3/2, 9/2).
    let m2: f64 = xs.iter().map(|x| x[0] * x[0]).sum::<f64>() / xs.len() as f64;
    let e = true_functional(&spec("entropy"), &p, None).unwrap().value;
    let e1 = true_functional(&spec("entropy"), &density("tgauss:3", 3), None).unwrap().value;
    assert!((e - e1 - 3.0 * c.ln()).abs() < 1e-9);
    assert!((m2 / (c * c) - 0.917_819_591_566_293_2).abs() < 0.03, "{m2}");
}
