//! Monte Carlo experiments: MSE sweeps over sample sizes, log-log rate fits,
//! Gamma-law convergence tests and the result files the command line writes.

mod ks;
mod output;
pub mod validate;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{tail_envelope, FunctionalSpec};
use crate::distributions::{true_functional, Density, Family, Truth, STREAM_X, STREAM_Y};
use crate::error::{Error, Result};
use crate::estimator::{estimate_single, estimate_two, pairwise_sum, schedule_single, ScheduleConstants, TruncationSchedule, Window};

pub use ks::{gamma_cdf, ks_statistic, run_ks_gamma_test, KsConfig};
pub use output::{emit_results, parse_rows_csv, write_rows_csv, OutputFormat, Report, LIBRARY_VERSION};

pub const DEFAULT_SAMPLE_SIZES: [usize; 8] = [200, 290, 420, 610, 880, 1270, 1830, 2500];
pub const DEFAULT_RUNS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct TruncationConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "one")]
    pub c_alpha: f64,
    #[serde(default = "one")]
    pub c_beta: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            enabled: false,
            c_alpha: 1.0,
            c_beta: 1.0,
        }
    }
}

/// How run seeds are derived from the base seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// `seed XOR run`.
    #[default]
    PerRun,
    /// Every run uses `seed` itself (for checking the aggregation).
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: FunctionalSpec,
    /// `p`, and `q` for divergences.
    pub densities: Vec<Family>,
    pub d: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default = "default_sizes")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed_mode: SeedMode,
}

fn default_sizes() -> Vec<usize> {
    DEFAULT_SAMPLE_SIZES.to_vec()
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}

impl ExperimentConfig {
    pub fn new(spec: FunctionalSpec, densities: Vec<Family>, d: usize, k: usize, l: Option<usize>) -> Self {
        ExperimentConfig {
            spec,
            densities,
            d,
            k,
            l,
            sample_sizes: default_sizes(),
            runs: DEFAULT_RUNS,
            seed: 0,
            truncation: TruncationConfig::default(),
            output: None,
            seed_mode: SeedMode::PerRun,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.densities.len() != self.spec.arity() {
            return bad(format!(
                "{} needs {} density(ies), got {}",
                self.spec,
                self.spec.arity(),
                self.densities.len()
            ));
        }
        let l = if self.spec.arity() == 2 {
            Some(self.l.ok_or_else(|| Error::Config(format!("{} needs l", self.spec)))?)
        } else {
            None
        };
        self.spec.check_orders(self.k, l)?;
        if self.runs < 2 {
            return bad(format!("runs must be at least 2, got {}", self.runs));
        }
        if self.sample_sizes.is_empty() {
            return bad("no sample sizes".into());
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sample sizes must be strictly increasing".into());
        }
        let floor = self.k.max(l.unwrap_or(0));
        if self.sample_sizes[0] <= floor {
            return bad(format!("every sample size must exceed {floor}"));
        }
        Ok(())
    }

    fn densities(&self) -> Result<(Density, Option<Density>)> {
        let p = Density::new(self.densities[0], self.d)?;
        let q = self.densities.get(1).map(|&f| Density::new(f, self.d)).transpose()?;
        Ok((p, q))
    }

    fn run_seed(&self, run: usize) -> u64 {
        match self.seed_mode {
            SeedMode::PerRun => self.seed ^ run as u64,
            SeedMode::Fixed => self.seed,
        }
    }
}

/// Truncation schedules for `U` and `V` from the envelope and the densities' classes.
pub fn truncation_schedules(
    spec: &FunctionalSpec,
    p: &Density,
    q: Option<&Density>,
    k: usize,
    l: Option<usize>,
    constants: ScheduleConstants,
) -> Result<(TruncationSchedule, TruncationSchedule)> {
    let env = tail_envelope(spec);
    let d = p.dim();
    let su = schedule_single(p.smoothness_class().sigma, env.a, k, d, constants)?;
    let sv = match (q, env.a_tilde, l) {
        (Some(q), Some(at), Some(l)) => schedule_single(q.smoothness_class().sigma, at, l, d, constants)?,
        _ => TruncationSchedule::none(),
    };
    Ok((su, sv))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub m: usize,
    pub mse: f64,
    pub bias2: f64,
    pub var: f64,
    pub stderr: f64,
}

/// Aggregates one sample size. `var` is the unbiased sample variance; `stderr` is the
/// jackknife standard error of the MSE, which for a mean equals `sd(e^2)/sqrt(R)`.
pub fn aggregate(m: usize, estimates: &[f64], truth: f64) -> MseRow {
    let r = estimates.len() as f64;
    let sq: Vec<f64> = estimates.iter().map(|e| (e - truth) * (e - truth)).collect();
    let mse = pairwise_sum(&sq) / r;
    let mean = pairwise_sum(estimates) / r;
    let dev: Vec<f64> = estimates.iter().map(|e| (e - mean) * (e - mean)).collect();
    let var = pairwise_sum(&dev) / (r - 1.0);
    let sq_dev: Vec<f64> = sq.iter().map(|s| (s - mse) * (s - mse)).collect();
    let stderr = (pairwise_sum(&sq_dev) / (r - 1.0) / r).sqrt();
    MseRow {
        m,
        mse,
        bias2: (mean - truth) * (mean - truth),
        var,
        stderr,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub truth: Truth,
    pub rows: Vec<MseRow>,
}

/// For each sample size, `runs` independent estimates against the ground truth. Runs
/// execute in parallel; results are collected by run index.
pub fn run_mse_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let (p, q) = config.densities()?;
    let truth = true_functional(&config.spec, &p, q.as_ref())?;
    let (su, sv) = if config.truncation.enabled {
        let c = ScheduleConstants {
            c_alpha: config.truncation.c_alpha,
            c_beta: config.truncation.c_beta,
        };
        truncation_schedules(&config.spec, &p, q.as_ref(), config.k, config.l, c)?
    } else {
        (TruncationSchedule::none(), TruncationSchedule::none())
    };
    let mut rows = Vec::with_capacity(config.sample_sizes.len());
    for &m in &config.sample_sizes {
        let (wu, wv) = (su.window(m), sv.window(m));
        let estimates = (0..config.runs)
            .into_par_iter()
            .map(|run| estimate_run(config, &p, q.as_ref(), m, config.run_seed(run), wu, wv))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(aggregate(m, &estimates, truth.value));
    }
    Ok(SweepResult { truth, rows })
}

fn estimate_run(
    config: &ExperimentConfig,
    p: &Density,
    q: Option<&Density>,
    m: usize,
    seed: u64,
    wu: Window,
    wv: Window,
) -> Result<f64> {
    let x = p.sample_stream(m, seed, STREAM_X)?;
    let est = match q {
        None => estimate_single(&x, &config.spec, config.k, wu)?,
        Some(q) => {
            let y = q.sample_stream(m, seed, STREAM_Y)?;
            let l = config.l.expect("validated");
            estimate_two(&x, &y, &config.spec, config.k, l, wu, wv)?
        }
    };
    Ok(est.value)
}

/// Least-squares fit of `log mse = intercept - slope log m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Decay exponent, reported positive.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_rate_exponent(rows: &[MseRow]) -> Result<RateFit> {
    if rows.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 rows, got {}", rows.len())));
    }
    if let Some(r) = rows.iter().find(|r| !(r.mse > 0.0 && r.mse.is_finite())) {
        return Err(Error::DegenerateFit(format!("mse at m = {} is {}", r.m, r.mse)));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.m as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mse.ln()).collect();
    fit_line(&xs, &ys).map(|(b, a, r2)| RateFit {
        slope: -b,
        intercept: a,
        r_squared: r2,
    })
}

/// OLS `y = a + b x`; returns `(b, a, r^2)`. A perfect fit of constant data has `r^2 = 1`.
fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all sample sizes are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    Ok((b, a, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rows(ms: &[usize], f: impl Fn(f64) -> f64) -> Vec<MseRow> {
        ms.iter()
            .map(|&m| MseRow {
                m,
                mse: f(m as f64),
                bias2: 0.0,
                var: 0.0,
                stderr: 0.0,
            })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_rate_exponent(&rows(&[200, 400, 800], |m| 1.0 / m)).unwrap();
        assert_relative_eq!(fit.slope, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        let fit = fit_rate_exponent(&rows(&[200, 400, 800], |_| 0.3)).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert!(fit_rate_exponent(&rows(&[200, 400, 800], |m| if m < 300.0 { 0.0 } else { 1.0 })).is_err());
        assert!(fit_rate_exponent(&rows(&[200, 400], |m| 1.0 / m)).is_err());
    }

    #[test]
    fn config_validation() {
        let spec: FunctionalSpec = "entropy".parse().unwrap();
        let mut c = ExperimentConfig::new(spec, vec![Family::UniformBox { side: 1.0 }], 2, 5, None);
        assert!(c.validate().is_ok());
        c.sample_sizes = vec![300, 200];
        assert!(c.validate().is_err());
        c.sample_sizes = vec![5, 10];
        assert!(c.validate().is_err());
        c.sample_sizes = vec![10, 20];
        c.runs = 1;
        assert!(c.validate().is_err());
        c.runs = 2;
        c.densities.push(Family::UniformBox { side: 1.0 });
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let c = ExperimentConfig::from_json(r#"{"spec": "kl", "densities": ["tgauss:3", "tgauss:3,2"], "d": 2, "k": 3, "l": 3}"#)
            .unwrap();
        assert_eq!(c.sample_sizes, DEFAULT_SAMPLE_SIZES);
        assert_eq!(c.runs, 100);
        assert!(!c.truncation.enabled);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(ExperimentConfig::from_json(r#"{"spec": "kl", "densities": [], "d": 2, "k": 3, "bogus": 1}"#).is_err());
    }
}
