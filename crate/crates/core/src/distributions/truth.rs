//! Ground-truth values `T(p) = E_p f(p(X))` and `T(p, q) = E_p f(p(X), q(X))`.
//!
//! Whenever the integrand depends on `x` only through one scalar the integral is reduced
//! to one dimension: the Euclidean radius for Gaussian and Cauchy pairs, the L1 norm for
//! exponential and Laplace pairs, and a closed form for boxes. Other pairs use nested
//! slice quadrature for `d <= 2` and Monte Carlo from `p` for `d >= 3`.

use std::cell::RefCell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Density, Family};
use crate::catalog::{f_value, FunctionalSpec};
use crate::error::{Error, Result};
use crate::knn::unit_ball_volume;
use crate::quadrature::{tanh_sinh, QuadResult, Tolerance};
use crate::special::ln_gamma;

pub const MONTE_CARLO_DRAWS: usize = 10_000_000;
const MONTE_CARLO_SEED: u64 = 0x5eed_0f_7a11;
const MONTE_CARLO_CHUNK: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    ClosedForm,
    Radial,
    L1Shell,
    Slice,
    MonteCarlo,
}

impl OracleMethod {
    pub fn name(&self) -> &'static str {
        match self {
            OracleMethod::ClosedForm => "closed-form",
            OracleMethod::Radial => "radial",
            OracleMethod::L1Shell => "l1-shell",
            OracleMethod::Slice => "slice",
            OracleMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// A ground-truth value. `error` is the quadrature error estimate, or the standard error
/// for Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truth {
    pub value: f64,
    pub error: f64,
    pub method: OracleMethod,
}

fn is_radial(f: &Family) -> bool {
    matches!(f, Family::TruncatedGaussian { .. } | Family::TruncatedCauchy { .. })
}

fn is_l1(f: &Family) -> bool {
    matches!(f, Family::TruncatedExponential { .. } | Family::TruncatedLaplace { .. })
}

fn is_box(f: &Family) -> bool {
    matches!(f, Family::UniformBox { .. })
}

fn check_inputs(spec: &FunctionalSpec, p: &Density, q: Option<&Density>) -> Result<()> {
    match (spec.arity(), q) {
        (1, None) => Ok(()),
        (2, Some(q)) if q.dim() == p.dim() => Ok(()),
        (2, Some(q)) => Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        }),
        (a, _) => Err(Error::InvalidParameter(format!(
            "{spec} takes {a} density(ies), got {}",
            1 + q.is_some() as usize
        ))),
    }
}

/// The most accurate applicable method.
pub fn default_method(p: &Density, q: Option<&Density>) -> OracleMethod {
    let fp = p.family();
    let fq = q.map(|q| q.family());
    match fq {
        None if is_box(&fp) => OracleMethod::ClosedForm,
        None if is_radial(&fp) => OracleMethod::Radial,
        None => OracleMethod::L1Shell,
        Some(fq) if is_box(&fp) && is_box(&fq) => OracleMethod::ClosedForm,
        Some(fq) if is_radial(&fp) && is_radial(&fq) => OracleMethod::Radial,
        Some(fq) if is_l1(&fp) && is_l1(&fq) => OracleMethod::L1Shell,
        Some(_) if p.dim() <= 2 => OracleMethod::Slice,
        Some(_) => OracleMethod::MonteCarlo,
    }
}

/// Ground truth by the default method.
pub fn true_functional(spec: &FunctionalSpec, p: &Density, q: Option<&Density>) -> Result<Truth> {
    check_inputs(spec, p, q)?;
    true_functional_with(spec, p, q, default_method(p, q))
}

/// Ground truth by an explicit method; errors when the method does not apply.
pub fn true_functional_with(
    spec: &FunctionalSpec,
    p: &Density,
    q: Option<&Density>,
    method: OracleMethod,
) -> Result<Truth> {
    check_inputs(spec, p, q)?;
    let undefined = || {
        Error::InvalidParameter(format!(
            "oracle method {} does not apply to {}{}",
            method.name(),
            p.family(),
            q.map(|q| format!(" vs {}", q.family())).unwrap_or_default()
        ))
    };
    let families_ok = |pred: fn(&Family) -> bool| pred(&p.family()) && q.map_or(true, |q| pred(&q.family()));
    let (value, error) = match method {
        OracleMethod::ClosedForm if families_ok(is_box) => (closed_form(spec, p, q)?, 0.0),
        OracleMethod::Radial if families_ok(is_radial) => quad(radial(spec, p, q))?,
        OracleMethod::L1Shell if families_ok(is_l1) => quad(l1_shell(spec, p, q))?,
        OracleMethod::Slice if p.dim() <= 2 => quad(slice(spec, p, q))?,
        OracleMethod::MonteCarlo => {
            let t = monte_carlo_functional(spec, p, q, MONTE_CARLO_DRAWS, MONTE_CARLO_SEED)?;
            (t.value, t.error)
        }
        _ => return Err(undefined()),
    };
    Ok(Truth { value, error, method })
}

fn quad(r: Result<QuadResult>) -> Result<(f64, f64)> {
    r.map(|r| (r.value, r.error))
}

/// Evaluates `f(p, q)`, stashing the first failure so that the quadrature can be
/// aborted and the failure reported as an undefined ground truth.
struct Integrand<'a> {
    spec: &'a FunctionalSpec,
    failure: RefCell<Option<String>>,
}

impl<'a> Integrand<'a> {
    fn new(spec: &'a FunctionalSpec) -> Self {
        Integrand {
            spec,
            failure: RefCell::new(None),
        }
    }

    /// `f(p, q) p`, or NaN after recording the failure.
    fn weighted(&self, p: f64, q: f64) -> f64 {
        let q = if self.spec.arity() == 2 { Some(q) } else { None };
        match f_value(self.spec, p, q) {
            Ok(v) => v * p,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert_with(|| e.to_string());
                f64::NAN
            }
        }
    }

    fn finish(&self, r: Result<QuadResult>) -> Result<QuadResult> {
        if let Some(msg) = self.failure.borrow_mut().take() {
            return Err(Error::OracleUndefined(format!("{}: {msg}", self.spec)));
        }
        r
    }
}

const LINE_TOL: Tolerance = Tolerance { abs: 1e-11, rel: 1e-11 };

fn closed_form(spec: &FunctionalSpec, p: &Density, q: Option<&Density>) -> Result<f64> {
    let side = |d: &Density| match d.family() {
        Family::UniformBox { side } => side,
        _ => unreachable!("closed form only for boxes"),
    };
    let pv = p.profile(0.0);
    let undefined = |e: Error| Error::OracleUndefined(format!("{spec}: {e}"));
    let Some(q) = q else {
        return f_value(spec, pv, None).map_err(undefined);
    };
    let qv = q.profile(0.0);
    let covered = (side(q).min(side(p)) / side(p)).powi(p.dim() as i32);
    let mut value = covered * f_value(spec, pv, Some(qv)).map_err(undefined)?;
    if covered < 1.0 {
        value += (1.0 - covered) * f_value(spec, pv, Some(0.0)).map_err(undefined)?;
    }
    Ok(value)
}

/// Integrates `g` over `[a, b]` split at the sorted interior `breaks`.
fn pieces<F: FnMut(f64) -> f64>(mut g: F, a: f64, b: f64, breaks: &[f64], tol: Tolerance) -> Result<QuadResult> {
    let mut knots = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    knots.extend(inner);
    knots.push(b);
    let mut total = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in knots.windows(2) {
        let r = tanh_sinh(&mut g, w[0], w[1], tol)?;
        total.value += r.value;
        total.error += r.error;
        total.evaluations += r.evaluations;
    }
    Ok(total)
}

/// `int_0^rho f(p(r), q(r)) p(r) d V_d r^{d-1} dr`.
fn radial(spec: &FunctionalSpec, p: &Density, q: Option<&Density>) -> Result<QuadResult> {
    let d = p.dim();
    let area = d as f64 * unit_ball_volume(d)?;
    let g = Integrand::new(spec);
    let rho = p.profile_extent();
    let breaks: Vec<f64> = q.map(|q| vec![q.profile_extent()]).unwrap_or_default();
    let r = pieces(
        |r| {
            let qv = q.map_or(0.0, |q| q.profile(r));
            g.weighted(p.profile(r), qv) * area * r.powi(d as i32 - 1)
        },
        0.0,
        rho,
        &breaks,
        LINE_TOL,
    );
    g.finish(r)
}

/// Integration over L1 shells `|x|_1 = s`. The shell's orthant part has measure
/// `s^{d-1}/(d-1)!` (times `sqrt d` in surface measure, absorbed by `ds`); the
/// exponential family lives on the positive orthant only.
fn l1_shell(spec: &FunctionalSpec, p: &Density, q: Option<&Density>) -> Result<QuadResult> {
    let d = p.dim();
    let ln_fact = ln_gamma(d as f64);
    let orthants = 2f64.powi(d as i32);
    let laplace = |x: &Density| matches!(x.family(), Family::TruncatedLaplace { .. });
    let p_laplace = laplace(p);
    let q_laplace = q.map_or(false, laplace);
    let g = Integrand::new(spec);
    let breaks: Vec<f64> = q.map(|q| vec![q.profile_extent()]).unwrap_or_default();
    let r = pieces(
        |s| {
            let shell = ((d as f64 - 1.0) * s.ln() - ln_fact).exp();
            let shell = if d == 1 { 1.0 } else { shell };
            let pv = p.profile(s);
            let q_on = q.map_or(0.0, |q| q.profile(s));
            let mut v = shell * g.weighted(pv, q_on);
            if p_laplace {
                let q_off = if q_laplace { q_on } else { 0.0 };
                v += (orthants - 1.0) * shell * g.weighted(pv, q_off);
            }
            v
        },
        0.0,
        p.profile_extent(),
        &breaks,
        LINE_TOL,
    );
    g.finish(r)
}

/// The support's section along coordinate 1: the interval of `x_1`, or for `d = 2` the
/// interval of `x_2` at fixed `x_1`.
fn section(x: &Density, x1: Option<f64>) -> Option<(f64, f64)> {
    let (lo, hi) = match (x.family(), x1) {
        (Family::TruncatedGaussian { .. } | Family::TruncatedCauchy { .. }, None) => {
            let r = x.profile_extent();
            (-r, r)
        }
        (Family::TruncatedGaussian { .. } | Family::TruncatedCauchy { .. }, Some(t)) => {
            let r = x.profile_extent();
            let h = (r * r - t * t).max(0.0).sqrt();
            (-h, h)
        }
        (Family::TruncatedLaplace { radius }, None) => (-radius, radius),
        (Family::TruncatedLaplace { radius }, Some(t)) => (-(radius - t.abs()), radius - t.abs()),
        (Family::TruncatedExponential { radius }, None) => (0.0, radius),
        (Family::TruncatedExponential { radius }, Some(t)) => (0.0, radius - t),
        (Family::UniformBox { side }, None) => (0.0, side),
        (Family::UniformBox { side }, Some(t)) => {
            if (0.0..=side).contains(&t) {
                (0.0, side)
            } else {
                return None;
            }
        }
    };
    (hi > lo).then_some((lo, hi))
}

fn section_breaks(q: Option<&Density>, x1: Option<f64>) -> Vec<f64> {
    let mut b = vec![0.0];
    if let Some((lo, hi)) = q.and_then(|q| section(q, x1)) {
        b.extend([lo, hi]);
    }
    b
}

/// Nested quadrature over the support of `p` for `d <= 2`, split at kinks and at the
/// edges of the support of `q`.
fn slice(spec: &FunctionalSpec, p: &Density, q: Option<&Density>) -> Result<QuadResult> {
    let d = p.dim();
    let g = Integrand::new(spec);
    let (lo, hi) = section(p, None).expect("non-empty support");
    let breaks = section_breaks(q, None);
    let r = if d == 1 {
        pieces(
            |x| g.weighted(p.pdf(&[x]), q.map_or(0.0, |q| q.pdf(&[x]))),
            lo,
            hi,
            &breaks,
            LINE_TOL,
        )
    } else {
        let inner_failure: RefCell<Option<Error>> = RefCell::new(None);
        let outer = pieces(
            |x1| {
                let Some((a, b)) = section(p, Some(x1)) else {
                    return 0.0;
                };
                let r = pieces(
                    |x2| {
                        let x = [x1, x2];
                        g.weighted(p.pdf(&x), q.map_or(0.0, |q| q.pdf(&x)))
                    },
                    a,
                    b,
                    &section_breaks(q, Some(x1)),
                    Tolerance::new(1e-11, 1e-11),
                );
                match r {
                    Ok(r) => r.value,
                    Err(e) => {
                        inner_failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            lo,
            hi,
            &breaks,
            Tolerance::new(1e-9, 1e-10),
        );
        match inner_failure.into_inner() {
            Some(e) if g.failure.borrow().is_none() => Err(e),
            _ => outer,
        }
    };
    g.finish(r)
}

/// Plain Monte Carlo from `p`: mean of `f(p(X), q(X))` over `draws` samples with its
/// standard error. Chunks use distinct generator streams and are combined in order.
pub fn monte_carlo_functional(
    spec: &FunctionalSpec,
    p: &Density,
    q: Option<&Density>,
    draws: usize,
    seed: u64,
) -> Result<Truth> {
    check_inputs(spec, p, q)?;
    if draws < 2 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least 2 draws".into()));
    }
    let chunks = draws.div_ceil(MONTE_CARLO_CHUNK);
    let partial: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = MONTE_CARLO_CHUNK.min(draws - c * MONTE_CARLO_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let xs = p.sample_with(n, &mut rng)?;
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for x in xs.iter() {
                let qv = q.map(|q| q.pdf(x));
                let v = f_value(spec, p.pdf(x), qv).map_err(|e| Error::OracleUndefined(format!("{spec}: {e}")))?;
                sum += v;
                sum2 += v * v;
            }
            Ok((sum, sum2))
        })
        .collect();
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for r in partial {
        let (s, s2) = r?;
        sum += s;
        sum2 += s2;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(Truth {
        value: mean,
        error: (var / n).sqrt(),
        method: OracleMethod::MonteCarlo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn density(s: &str, d: usize) -> Density {
        Density::new(s.parse().unwrap(), d).unwrap()
    }

    #[test]
    fn trivial_truths() {
        let h: FunctionalSpec = "entropy".parse().unwrap();
        for d in 1..=4 {
            assert_eq!(true_functional(&h, &density("uniform:1", d), None).unwrap().value, 0.0);
        }
        let kl: FunctionalSpec = "kl".parse().unwrap();
        for f in Family::defaults(2) {
            let p = Density::new(f, 2).unwrap();
            let t = true_functional(&kl, &p, Some(&p)).unwrap();
            assert!(t.value.abs() < 1e-12, "{f}: {t:?}");
        }
    }

    #[test]
    fn gaussian_entropy_matches_slice() {
        let h: FunctionalSpec = "entropy".parse().unwrap();
        let p = density("tgauss:3", 2);
        let a = true_functional(&h, &p, None).unwrap();
        let b = true_functional_with(&h, &p, None, OracleMethod::Slice).unwrap();
        assert_eq!(a.method, OracleMethod::Radial);
        assert_relative_eq!(a.value, b.value, max_relative = 1e-9);
    }

    #[test]
    fn support_violation_is_undefined() {
        let kl: FunctionalSpec = "kl".parse().unwrap();
        let p = density("tgauss:3,2", 2);
        let q = density("tgauss:3", 2);
        assert!(matches!(true_functional(&kl, &p, Some(&q)), Err(Error::OracleUndefined(_))));
        let p = density("tlaplace:1", 2);
        let q = density("texp:3", 2);
        assert!(matches!(true_functional(&kl, &p, Some(&q)), Err(Error::OracleUndefined(_))));
    }

    #[test]
    fn method_must_apply() {
        let h: FunctionalSpec = "entropy".parse().unwrap();
        let p = density("texp:4", 2);
        assert!(true_functional_with(&h, &p, None, OracleMethod::Radial).is_err());
    }
}
