//! Kolmogorov-Smirnov check of the Gamma limit of `U = m V_d r_k(x)^d` at a fixed
//! query point.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::distributions::{Density, STREAM_X};
use crate::error::{Error, Result};
use crate::knn::{squared_distance, unit_ball_volume};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsConfig {
    pub x: Vec<f64>,
    pub k: usize,
    pub m: usize,
    pub reps: usize,
    pub seed: u64,
}

/// CDF of Gamma(shape, rate) at `u`.
pub fn gamma_cdf(shape: f64, rate: f64, u: f64) -> Result<f64> {
    let g = Gamma::new(shape, rate).map_err(|e| Error::InvalidParameter(format!("gamma({shape}, {rate}): {e}")))?;
    Ok(g.cdf(u))
}

/// `sup |F_n - F|` for the empirical CDF of `samples`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Squared distance from `x` to its k-th nearest point in `coords`.
fn kth_dist2(coords: &[f64], dim: usize, x: &[f64], k: usize) -> f64 {
    let mut d2: Vec<f64> = coords.chunks_exact(dim).map(|p| squared_distance(p, x)).collect();
    let (_, kth, _) = d2.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// KS statistic of `reps` draws of `U_m^(k)(x)` against Gamma(k, p(x)). Repetition `r`
/// samples with seed `seed XOR r`.
pub fn run_ks_gamma_test(density: &Density, x: &[f64], k: usize, m: usize, reps: usize, seed: u64) -> Result<f64> {
    if x.len() != density.dim() {
        return Err(Error::DimensionMismatch {
            expected: density.dim(),
            found: x.len(),
        });
    }
    if !density.contains_interior(x) {
        return Err(Error::Domain(format!("query point {x:?} is not interior to {}", density.family())));
    }
    if k == 0 || m <= k {
        return Err(Error::InvalidParameter(format!("need 1 <= k < m, got k = {k}, m = {m}")));
    }
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    let d = density.dim();
    let vd = unit_ball_volume(d)?;
    let us = (0..reps)
        .into_par_iter()
        .map(|r| {
            let pts = density.sample_stream(m, seed ^ r as u64, STREAM_X)?;
            let r2 = kth_dist2(pts.as_flat(), d, x, k);
            Ok(m as f64 * vd * r2.sqrt().powi(d as i32))
        })
        .collect::<Result<Vec<f64>>>()?;
    let g = Gamma::new(k as f64, density.pdf(x)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(ks_statistic(&us, |u| g.cdf(u)))
}
