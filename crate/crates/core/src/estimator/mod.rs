//! Truncated k-NN estimators, their leave-one-out jackknife standard errors, and the
//! theoretical rate exponents.
//!
//! The single-density estimate is `(1/m) sum_i phi_k(U_i) 1{U_i in [alpha, beta]}` with
//! `U_i = (m-1) V_d r_k(X_i)^d`. The two-density estimate also requires
//! `V_i = n V_d r_l(X_i | Y)^d` to lie in its own window. Out-of-window terms contribute
//! exactly zero. Sums are evaluated pairwise in index order, so results do not depend on
//! the number of threads.

mod rates;
mod schedule;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{EstimatorFunction, FunctionalSpec};
use crate::error::{Error, Result};
use crate::knn::{ball_volume, cross_neighbors, self_neighbors, unit_ball_volume, KnnIndex, Neighbor};
use crate::points::PointSet;

pub use rates::{theoretical_exponent_single, theoretical_exponent_two, RateExponents, RateFlag, RateScalar, TailRegime};
pub use schedule::{
    schedule_single, truncation_points_single, LowerRule, ScheduleConstants, TruncationSchedule, UpperRule, Window,
    UPPER_POLYLOG_POWER,
};

/// A point estimate with bookkeeping about which terms contributed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Number of sample points `m`.
    pub terms: usize,
    /// Terms whose volumes fell inside the truncation windows.
    pub in_window: usize,
    /// In-window terms where `phi` was not finite; they contribute 0.
    pub non_finite: usize,
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Truncated term: `phi * 1{in window}`, with non-finite values mapped to 0.
#[derive(Clone, Copy)]
struct Term {
    value: f64,
    in_window: bool,
    finite: bool,
}

fn term(phi: &EstimatorFunction, u: f64, v: f64, wu: &Window, wv: Option<&Window>) -> Term {
    let inside = wu.contains(u) && wv.map_or(true, |w| w.contains(v));
    if !inside {
        return Term {
            value: 0.0,
            in_window: false,
            finite: true,
        };
    }
    let x = phi.eval(u, v);
    if x.is_finite() {
        Term {
            value: x,
            in_window: true,
            finite: true,
        }
    } else {
        Term {
            value: 0.0,
            in_window: true,
            finite: false,
        }
    }
}

fn summarize(terms: &[Term]) -> Estimate {
    let values: Vec<f64> = terms.iter().map(|t| t.value).collect();
    let non_finite = terms.iter().filter(|t| !t.finite).count();
    if non_finite > 0 {
        log::warn!("{non_finite} in-window estimator terms were not finite and were dropped");
    }
    Estimate {
        value: mean(&values),
        terms: terms.len(),
        in_window: terms.iter().filter(|t| t.in_window).count(),
        non_finite,
    }
}

fn check_arity(spec: &FunctionalSpec, arity: usize) -> Result<()> {
    if spec.arity() != arity {
        return Err(Error::InvalidParameter(format!(
            "{spec} takes {} densities, not {arity}",
            spec.arity()
        )));
    }
    Ok(())
}

fn need(available: usize, needed: usize) -> Result<()> {
    if available < needed {
        Err(Error::InsufficientPoints { needed, available })
    } else {
        Ok(())
    }
}

/// Single-density estimate of `spec` from `sample` with order `k` and window `[alpha, beta]`.
pub fn estimate_single(sample: &PointSet, spec: &FunctionalSpec, k: usize, window: Window) -> Result<Estimate> {
    check_arity(spec, 1)?;
    let phi = EstimatorFunction::new(spec, k, None)?;
    need(sample.len(), k + 1)?;
    let d = sample.dim();
    let vd = unit_ball_volume(d)?;
    let index = KnnIndex::new(sample);
    let nbrs = self_neighbors(&index, k)?;
    let mult = (sample.len() - 1) as f64;
    let terms: Vec<Term> = nbrs
        .par_iter()
        .map(|nb| term(&phi, ball_volume(mult, vd, nb[k - 1].dist2, d), f64::NAN, &window, None))
        .collect();
    Ok(summarize(&terms))
}

/// Two-density estimate of `spec` from `x ~ p` and `y ~ q`.
pub fn estimate_two(
    x: &PointSet,
    y: &PointSet,
    spec: &FunctionalSpec,
    k: usize,
    l: usize,
    window_u: Window,
    window_v: Window,
) -> Result<Estimate> {
    check_arity(spec, 2)?;
    let phi = EstimatorFunction::new(spec, k, Some(l))?;
    check_dims(x, y)?;
    need(x.len(), k + 1)?;
    need(y.len(), l)?;
    let d = x.dim();
    let vd = unit_ball_volume(d)?;
    let ix = KnnIndex::new(x);
    let iy = KnnIndex::new(y);
    let nx = self_neighbors(&ix, k)?;
    let ny = cross_neighbors(&iy, x, l)?;
    let mu = (x.len() - 1) as f64;
    let mv = y.len() as f64;
    let terms: Vec<Term> = nx
        .par_iter()
        .zip(ny.par_iter())
        .map(|(a, b)| {
            let u = ball_volume(mu, vd, a[k - 1].dist2, d);
            let v = ball_volume(mv, vd, b[l - 1].dist2, d);
            term(&phi, u, v, &window_u, Some(&window_v))
        })
        .collect();
    Ok(summarize(&terms))
}

fn check_dims(x: &PointSet, y: &PointSet) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(())
}

/// An estimate together with its leave-one-out jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JackknifeEstimate {
    pub estimate: Estimate,
    pub std_error: f64,
}

fn jackknife_variance(replicates: &[f64]) -> f64 {
    let n = replicates.len() as f64;
    let centre = mean(replicates);
    let dev: Vec<f64> = replicates.iter().map(|r| (r - centre) * (r - centre)).collect();
    (n - 1.0) / n * pairwise_sum(&dev)
}

/// For each deleted index `j`, the sum over `i` with `j` in `N_k(i)` of `diffs[i]`: the
/// change from moving the k-th neighbour of `i` to its (k+1)-th.
fn reverse_shift(nbrs: &[Vec<Neighbor>], k: usize, diffs: &[f64], size: usize) -> Vec<f64> {
    let mut shift = vec![0.0; size];
    for (i, nb) in nbrs.iter().enumerate() {
        for n in &nb[..k] {
            shift[n.index] += diffs[i];
        }
    }
    shift
}

/// Single-density estimate with its exact leave-one-out jackknife standard error.
pub fn jackknife_single(sample: &PointSet, spec: &FunctionalSpec, k: usize, window: Window) -> Result<JackknifeEstimate> {
    let estimate = estimate_single(sample, spec, k, window)?;
    let phi = EstimatorFunction::new(spec, k, None)?;
    let m = sample.len();
    need(m, k + 3)?;
    let d = sample.dim();
    let vd = unit_ball_volume(d)?;
    let index = KnnIndex::new(sample);
    let nbrs = self_neighbors(&index, k + 1)?;
    let mult = (m - 2) as f64;
    let base_alt: Vec<(f64, f64)> = nbrs
        .par_iter()
        .map(|nb| {
            let b = term(&phi, ball_volume(mult, vd, nb[k - 1].dist2, d), f64::NAN, &window, None).value;
            let a = term(&phi, ball_volume(mult, vd, nb[k].dist2, d), f64::NAN, &window, None).value;
            (b, a)
        })
        .collect();
    let base: Vec<f64> = base_alt.iter().map(|p| p.0).collect();
    let diffs: Vec<f64> = base_alt.iter().map(|p| p.0 - p.1).collect();
    let shift = reverse_shift(&nbrs, k, &diffs, m);
    let total = pairwise_sum(&base);
    let replicates: Vec<f64> = (0..m)
        .map(|j| (total - base[j] - shift[j]) / (m - 1) as f64)
        .collect();
    Ok(JackknifeEstimate {
        estimate,
        std_error: jackknife_variance(&replicates).sqrt(),
    })
}

/// Two-density estimate with jackknife standard error; the variance adds the
/// leave-one-out-of-`x` and leave-one-out-of-`y` contributions.
pub fn jackknife_two(
    x: &PointSet,
    y: &PointSet,
    spec: &FunctionalSpec,
    k: usize,
    l: usize,
    window_u: Window,
    window_v: Window,
) -> Result<JackknifeEstimate> {
    let estimate = estimate_two(x, y, spec, k, l, window_u, window_v)?;
    let phi = EstimatorFunction::new(spec, k, Some(l))?;
    let m = x.len();
    let n = y.len();
    need(m, k + 3)?;
    need(n, l + 2)?;
    let d = x.dim();
    let vd = unit_ball_volume(d)?;
    let ix = KnnIndex::new(x);
    let iy = KnnIndex::new(y);
    let nx = self_neighbors(&ix, k + 1)?;
    let ny = cross_neighbors(&iy, x, l + 1)?;
    let t = |u: f64, v: f64| term(&phi, u, v, &window_u, Some(&window_v)).value;

    // Deleting a point of x.
    let mu = (m - 2) as f64;
    let mv = n as f64;
    let xs: Vec<(f64, f64)> = nx
        .par_iter()
        .zip(ny.par_iter())
        .map(|(a, b)| {
            let v = ball_volume(mv, vd, b[l - 1].dist2, d);
            let base = t(ball_volume(mu, vd, a[k - 1].dist2, d), v);
            let alt = t(ball_volume(mu, vd, a[k].dist2, d), v);
            (base, alt)
        })
        .collect();
    let base: Vec<f64> = xs.iter().map(|p| p.0).collect();
    let diffs: Vec<f64> = xs.iter().map(|p| p.0 - p.1).collect();
    let shift = reverse_shift(&nx, k, &diffs, m);
    let total = pairwise_sum(&base);
    let rep_x: Vec<f64> = (0..m)
        .map(|j| (total - base[j] - shift[j]) / (m - 1) as f64)
        .collect();

    // Deleting a point of y.
    let mu = (m - 1) as f64;
    let mv = (n - 1) as f64;
    let ys: Vec<(f64, f64)> = nx
        .par_iter()
        .zip(ny.par_iter())
        .map(|(a, b)| {
            let u = ball_volume(mu, vd, a[k - 1].dist2, d);
            let base = t(u, ball_volume(mv, vd, b[l - 1].dist2, d));
            let alt = t(u, ball_volume(mv, vd, b[l].dist2, d));
            (base, alt)
        })
        .collect();
    let base: Vec<f64> = ys.iter().map(|p| p.0).collect();
    let diffs: Vec<f64> = ys.iter().map(|p| p.0 - p.1).collect();
    let shift = reverse_shift(&ny, l, &diffs, n);
    let total = pairwise_sum(&base);
    let rep_y: Vec<f64> = (0..n).map(|j| (total - shift[j]) / m as f64).collect();

    let var = jackknife_variance(&rep_x) + jackknife_variance(&rep_y);
    Ok(JackknifeEstimate {
        estimate,
        std_error: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::self_knn_volumes;
    use approx::assert_relative_eq;

    fn spec(s: &str) -> FunctionalSpec {
        s.parse().unwrap()
    }

    fn grid_points() -> PointSet {
        let rows: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = i as f64;
                [(t * 0.37).sin() + 0.01 * t, (t * 0.91).cos() * 1.3]
            })
            .collect();
        PointSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn window_above_everything_gives_zero() {
        let ps = grid_points();
        let u = self_knn_volumes(&ps, 3).unwrap();
        let min_u = u.iter().cloned().fold(f64::INFINITY, f64::min);
        let w = Window::new(0.0, min_u * 0.5).unwrap();
        let e = estimate_single(&ps, &spec("entropy"), 3, w).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.in_window, 0);
    }

    #[test]
    fn untruncated_matches_plain_average() {
        let ps = grid_points();
        let u = self_knn_volumes(&ps, 3).unwrap();
        let phi = EstimatorFunction::new(&spec("entropy"), 3, None).unwrap();
        let direct: f64 = u.iter().map(|&x| phi.eval(x, 0.0)).sum::<f64>() / u.len() as f64;
        let e = estimate_single(&ps, &spec("entropy"), 3, Window::UNBOUNDED).unwrap();
        assert_relative_eq!(e.value, direct, max_relative = 1e-13);
    }

    #[test]
    fn jackknife_matches_brute_force() {
        let ps = grid_points();
        let s = spec("entropy");
        let jk = jackknife_single(&ps, &s, 2, Window::UNBOUNDED).unwrap();
        let m = ps.len();
        let reps: Vec<f64> = (0..m)
            .map(|j| {
                let rows: Vec<&[f64]> = ps.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, p)| p).collect();
                let sub = PointSet::from_rows(&rows).unwrap();
                estimate_single(&sub, &s, 2, Window::UNBOUNDED).unwrap().value
            })
            .collect();
        let se = jackknife_variance(&reps).sqrt();
        assert_relative_eq!(jk.std_error, se, max_relative = 1e-9);
    }

    #[test]
    fn jackknife_two_matches_brute_force() {
        let x = grid_points();
        let rows: Vec<[f64; 2]> = (0..30).map(|i| [(i as f64 * 0.53).cos(), (i as f64 * 0.29).sin() * 0.8]).collect();
        let y = PointSet::from_rows(&rows).unwrap();
        let s = spec("kl");
        let w = Window::UNBOUNDED;
        let jk = jackknife_two(&x, &y, &s, 2, 3, w, w).unwrap();
        let drop = |ps: &PointSet, j: usize| {
            let rows: Vec<&[f64]> = ps.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, p)| p).collect();
            PointSet::from_rows(&rows).unwrap()
        };
        let rx: Vec<f64> = (0..x.len())
            .map(|j| estimate_two(&drop(&x, j), &y, &s, 2, 3, w, w).unwrap().value)
            .collect();
        let ry: Vec<f64> = (0..y.len())
            .map(|j| estimate_two(&x, &drop(&y, j), &s, 2, 3, w, w).unwrap().value)
            .collect();
        let se = (jackknife_variance(&rx) + jackknife_variance(&ry)).sqrt();
        assert_relative_eq!(jk.std_error, se, max_relative = 1e-9);
    }

    #[test]
    fn errors() {
        let ps = grid_points();
        assert!(estimate_single(&ps, &spec("kl"), 3, Window::UNBOUNDED).is_err());
        assert!(matches!(
            estimate_single(&ps, &spec("entropy"), 40, Window::UNBOUNDED),
            Err(Error::InsufficientPoints { .. })
        ));
        let y = PointSet::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        assert!(matches!(
            estimate_two(&ps, &y, &spec("kl"), 2, 2, Window::UNBOUNDED, Window::UNBOUNDED),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pairwise_is_order_fixed() {
        let xs: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_relative_eq!(pairwise_sum(&xs), xs.iter().sum::<f64>(), max_relative = 1e-14);
    }
}
