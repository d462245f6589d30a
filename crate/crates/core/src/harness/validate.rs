//! Self-check suites run by `knnfunc validate`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::run_ks_gamma_test;
use crate::catalog::{gamma_expectation, FunctionalSpec};
use crate::distributions::{Density, Family};
use crate::error::{Error, Result};
use crate::knn::KnnIndex;
use crate::points::PointSet;
use crate::special::{gamma, lower_incomplete_gamma, upper_incomplete_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    GammaOracle,
    Ks,
    IncGamma,
    KnnEquiv,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::GammaOracle, Suite::Ks, Suite::IncGamma, Suite::KnnEquiv];

    pub fn run(&self) -> Result<SuiteReport> {
        match self {
            Suite::GammaOracle => gamma_oracle_suite(GAMMA_ORACLE_TOLERANCE),
            Suite::Ks => ks_suite(&KsSuiteConfig::default()),
            Suite::IncGamma => inc_gamma_suite(),
            Suite::KnnEquiv => knn_equiv_suite(200, 0xa7),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::GammaOracle => "gamma-oracle",
            Suite::Ks => "ks",
            Suite::IncGamma => "inc-gamma",
            Suite::KnnEquiv => "knn-equiv",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub checks: usize,
    pub failures: Vec<String>,
    /// Largest observed value of the checked quantity (suite-specific).
    pub worst: f64,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport {
            name: name.into(),
            checks: 0,
            failures: Vec::new(),
            worst: 0.0,
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }
}

pub const GAMMA_ORACLE_TOLERANCE: f64 = 1e-6;
pub const GAMMA_ORACLE_RATES: [f64; 3] = [0.25, 1.0, 4.0];

/// `|E[phi] - f|` over every catalogue functional, `k, l` in `1..=6` where the side
/// conditions allow, and rates in [`GAMMA_ORACLE_RATES`].
pub fn gamma_oracle_suite(tolerance: f64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("gamma-oracle");
    for spec in FunctionalSpec::catalogue() {
        let ls: Vec<Option<usize>> = if spec.arity() == 1 { vec![None] } else { (1..=6).map(Some).collect() };
        let qs: Vec<Option<f64>> =
            if spec.arity() == 1 { vec![None] } else { GAMMA_ORACLE_RATES.iter().map(|&q| Some(q)).collect() };
        let mut worst: f64 = 0.0;
        for k in 1..=6 {
            for &l in &ls {
                if spec.check_orders(k, l).is_err() {
                    continue;
                }
                for p in GAMMA_ORACLE_RATES {
                    for &q in &qs {
                        rep.checks += 1;
                        let at = format!("{spec} k={k} l={l:?} p={p} q={q:?}");
                        match gamma_expectation(&spec, k, l, p, q, 1e-9) {
                            Ok(g) => {
                                let r = g.residual().abs();
                                worst = worst.max(r);
                                if !(r <= tolerance) {
                                    rep.failures.push(format!("{at}: E = {}, f = {}", g.expectation, g.target));
                                }
                            }
                            Err(e) => rep.failures.push(format!("{at}: {e}")),
                        }
                    }
                }
            }
        }
        rep.worst = rep.worst.max(worst);
        rep.notes.push(format!("{spec}: worst residual {worst:.2e}"));
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsSuiteConfig {
    pub orders: Vec<usize>,
    pub points: Vec<[f64; 2]>,
    pub m_small: usize,
    pub m_large: usize,
    pub reps: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for KsSuiteConfig {
    fn default() -> Self {
        KsSuiteConfig {
            orders: vec![1, 3, 5],
            points: vec![[0.03, 0.03]],
            m_small: 250,
            m_large: 4000,
            reps: 2000,
            threshold: 0.05,
            seed: 0x5a2,
        }
    }
}

/// Uniform unit square: at each point and order, `KS(m_large) <= threshold` and
/// `KS(m_large) < KS(m_small)`. `worst` is the largest `KS(m_large)`.
pub fn ks_suite(cfg: &KsSuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("ks");
    let p = Density::new(Family::UniformBox { side: 1.0 }, 2)?;
    for x in &cfg.points {
        for &k in &cfg.orders {
            let small = run_ks_gamma_test(&p, x, k, cfg.m_small, cfg.reps, cfg.seed)?;
            let large = run_ks_gamma_test(&p, x, k, cfg.m_large, cfg.reps, cfg.seed)?;
            rep.checks += 1;
            rep.worst = rep.worst.max(large);
            let line = format!("x={x:?} k={k}: KS(m={}) = {small:.4}, KS(m={}) = {large:.4}", cfg.m_small, cfg.m_large);
            if !(large <= cfg.threshold && large < small) {
                rep.failures.push(line.clone());
            }
            rep.notes.push(line);
        }
    }
    Ok(rep)
}

/// The incomplete-gamma bounds `Gamma(s, x) <= Gamma(s) x^{s-1} e^{1-x}` on
/// `[1, 10] x [1, 20]` and `gamma(s, x) <= x^s / s` on `(0, 10] x (0, 20]`.
/// `worst` is the largest ratio of left to right side.
pub fn inc_gamma_suite() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("inc-gamma");
    let steps = 80;
    for i in 0..=steps {
        let s = 1.0 + 9.0 * i as f64 / steps as f64;
        for j in 0..=2 * steps {
            let x = 1.0 + 19.0 * j as f64 / (2 * steps) as f64;
            let lhs = upper_incomplete_gamma(s, x);
            let rhs = gamma(s) * x.powf(s - 1.0) * (1.0 - x).exp();
            rep.checks += 1;
            rep.worst = rep.worst.max(lhs / rhs);
            if !(lhs <= rhs) {
                rep.failures.push(format!("upper: s={s}, x={x}: {lhs} > {rhs}"));
            }
        }
    }
    for i in 1..=steps {
        let s = 10.0 * i as f64 / steps as f64;
        for j in 1..=2 * steps {
            let x = 20.0 * j as f64 / (2 * steps) as f64;
            let lhs = lower_incomplete_gamma(s, x);
            let rhs = x.powf(s) / s;
            rep.checks += 1;
            rep.worst = rep.worst.max(lhs / rhs);
            if !(lhs <= rhs) {
                rep.failures.push(format!("lower: s={s}, x={x}: {lhs} > {rhs}"));
            }
        }
    }
    Ok(rep)
}

/// Random point sets (some on an integer grid, to force ties) queried through the
/// kd-tree and by brute force; indices and squared distances must agree exactly.
pub fn knn_equiv_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("knn-equiv");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for inst in 0..instances {
        let d = rng.gen_range(1..=6);
        let m = rng.gen_range(11..=500);
        let k = rng.gen_range(1..=10);
        let grid = inst % 4 == 0;
        let coords: Vec<f64> = (0..m * d)
            .map(|_| if grid { rng.gen_range(0..5) as f64 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        let pts = PointSet::new(coords, d)?;
        let index = KnnIndex::with_leaf_size(&pts, rng.gen_range(1..=16));
        for i in 0..m {
            let q = pts.point(i);
            let tree = index.query(q, k, Some(i))?;
            let brute = index.query_brute(q, k, Some(i))?;
            rep.checks += 1;
            if tree != brute {
                rep.failures.push(format!("instance {inst} (m={m}, d={d}, k={k}), query {i}"));
                break;
            }
        }
    }
    Ok(rep)
}
