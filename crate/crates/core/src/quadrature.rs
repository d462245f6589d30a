//! Double-exponential quadrature: tanh-sinh on finite intervals and exp-sinh on
//! half-lines, with interval bisection when a rule fails to converge.
//!
//! The error estimate is the difference between the last two refinement levels, which
//! overstates the true error once the rule is in its convergent regime.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const TS_T_MAX: f64 = 4.0;
const ES_T_MIN: f64 = -4.5;
const ES_T_MAX: f64 = 3.0;
const MAX_LEVEL: usize = 8;
const MIN_LEVEL: usize = 3;
const MAX_DEPTH: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    fn accepts(&self, err: f64, value: f64) -> bool {
        err <= self.abs.max(self.rel * value.abs())
    }

    fn halved(&self) -> Self {
        Tolerance {
            abs: self.abs * 0.5,
            rel: self.rel,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-12, 1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl QuadResult {
    fn add(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

/// Nodes of one refinement level: `(t-offset fraction c, unit weight w)`.
type Level = Vec<(f64, f64)>;

struct Tables {
    /// Tanh-sinh: `c = (1 - tanh(pi/2 sinh t)) / 2`, weight for unit interval, `t > 0`.
    tanh_sinh: Vec<Level>,
    /// Exp-sinh: `e = exp(pi/2 sinh t)` and weight, `t` spanning both signs.
    exp_sinh: Vec<Level>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut tanh_sinh = Vec::with_capacity(MAX_LEVEL + 1);
        let mut exp_sinh = Vec::with_capacity(MAX_LEVEL + 1);
        for level in 0..=MAX_LEVEL {
            let h = 0.5f64.powi(level as i32);
            let step = if level == 0 { 1 } else { 2 };
            let mut ts = Vec::new();
            let mut i = 1;
            loop {
                let t = i as f64 * h;
                if t > TS_T_MAX {
                    break;
                }
                let y = FRAC_PI_2 * t.sinh();
                let c = 1.0 / (1.0 + (2.0 * y).exp());
                let w = FRAC_PI_2 * t.cosh() * 2.0 * c * (1.0 - c);
                ts.push((c, w));
                i += step;
            }
            tanh_sinh.push(ts);

            let mut es = Vec::new();
            let lo = (ES_T_MIN / h).ceil() as i64;
            let hi = (ES_T_MAX / h).floor() as i64;
            for i in lo..=hi {
                if level > 0 && i % 2 == 0 {
                    continue;
                }
                let t = i as f64 * h;
                let e = (FRAC_PI_2 * t.sinh()).exp();
                let w = FRAC_PI_2 * t.cosh() * e;
                es.push((e, w));
            }
            exp_sinh.push(es);
        }
        Tables {
            tanh_sinh,
            exp_sinh,
        }
    })
}

fn check(x: f64, fx: f64) -> Result<f64> {
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(Error::Domain(format!("non-finite integrand {fx} at {x}")))
    }
}

/// One tanh-sinh pass without bisection. Returns the final estimate and whether it met
/// the tolerance.
fn tanh_sinh_pass(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<(QuadResult, bool)> {
    let tabs = tables();
    let len = b - a;
    let mid = a + 0.5 * len;
    let mut evals = 1;
    let mut sum = FRAC_PI_2 * 0.5 * check(mid, f(mid))?;
    let mut prev = f64::NAN;
    let mut estimate = 0.0;
    let mut err = f64::INFINITY;
    for (level, nodes) in tabs.tanh_sinh.iter().enumerate() {
        let mut add = 0.0;
        for &(c, w) in nodes {
            let off = len * c;
            let xl = a + off;
            let xr = b - off;
            if xl > a {
                add += w * check(xl, f(xl))?;
                evals += 1;
            }
            if xr < b {
                add += w * check(xr, f(xr))?;
                evals += 1;
            }
        }
        sum += add;
        let h = 0.5f64.powi(level as i32);
        estimate = len * h * sum;
        if level > 0 {
            err = (estimate - prev).abs();
            if level >= MIN_LEVEL && tol.accepts(err, estimate) {
                return Ok((
                    QuadResult {
                        value: estimate,
                        error: err,
                        evaluations: evals,
                    },
                    true,
                ));
            }
        }
        prev = estimate;
    }
    Ok((
        QuadResult {
            value: estimate,
            error: err,
            evaluations: evals,
        },
        false,
    ))
}

fn tanh_sinh_adaptive(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: Tolerance,
    depth: u32,
) -> Result<QuadResult> {
    let (res, ok) = tanh_sinh_pass(f, a, b, tol)?;
    if ok {
        return Ok(res);
    }
    let mid = a + 0.5 * (b - a);
    if depth >= MAX_DEPTH || !(mid > a && mid < b) {
        return Err(Error::Quadrature {
            value: res.value,
            error: res.error,
        });
    }
    let left = tanh_sinh_adaptive(f, a, mid, tol.halved(), depth + 1)?;
    let right = tanh_sinh_adaptive(f, mid, b, tol.halved(), depth + 1)?;
    Ok(left.add(right))
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "finite interval required, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if a > b {
        let r = tanh_sinh_adaptive(&mut f, b, a, tol, 0)?;
        return Ok(QuadResult {
            value: -r.value,
            ..r
        });
    }
    tanh_sinh_adaptive(&mut f, a, b, tol, 0)
}

fn exp_sinh_pass(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<(QuadResult, bool)> {
    let tabs = tables();
    let mut evals = 0;
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    let mut estimate = 0.0;
    let mut err = f64::INFINITY;
    for (level, nodes) in tabs.exp_sinh.iter().enumerate() {
        for &(e, w) in nodes {
            let x = a + scale * e;
            if x > a && x.is_finite() {
                sum += w * check(x, f(x))?;
                evals += 1;
            }
        }
        let h = 0.5f64.powi(level as i32);
        estimate = scale * h * sum;
        if level > 0 {
            err = (estimate - prev).abs();
            if level >= MIN_LEVEL && tol.accepts(err, estimate) {
                return Ok((
                    QuadResult {
                        value: estimate,
                        error: err,
                        evaluations: evals,
                    },
                    true,
                ));
            }
        }
        prev = estimate;
    }
    Ok((
        QuadResult {
            value: estimate,
            error: err,
            evaluations: evals,
        },
        false,
    ))
}

fn exp_sinh_adaptive(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    scale: f64,
    tol: Tolerance,
    depth: u32,
) -> Result<QuadResult> {
    let (res, ok) = exp_sinh_pass(f, a, scale, tol)?;
    if ok {
        return Ok(res);
    }
    if depth >= 4 {
        return Err(Error::Quadrature {
            value: res.value,
            error: res.error,
        });
    }
    // Peel a finite head off the half-line and retry the tail at a coarser scale.
    let cut = a + 2.0 * scale;
    let head = tanh_sinh_adaptive(f, a, cut, tol.halved(), 0)?;
    let tail = exp_sinh_adaptive(f, cut, 2.0 * scale, tol.halved(), depth + 1)?;
    Ok(head.add(tail))
}

/// Integrates `f` over `[a, inf)`. `scale` should be of the order of the distance from
/// `a` over which the integrand varies (for a Gamma density, its mean).
pub fn exp_sinh<F: FnMut(f64) -> f64>(mut f: F, a: f64, scale: f64, tol: Tolerance) -> Result<QuadResult> {
    if !a.is_finite() || !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "exp-sinh needs finite start and positive scale, got {a}, {scale}"
        )));
    }
    exp_sinh_adaptive(&mut f, a, scale, tol, 0)
}

/// Integrates over `[a, b]` with `b` possibly `+inf`, splitting at the interior
/// `breaks` (which must be sorted and lie in `(a, b)`).
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    scale: f64,
    tol: Tolerance,
) -> Result<QuadResult> {
    let mut knots = Vec::with_capacity(breaks.len() + 2);
    knots.push(a);
    knots.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    knots.push(b);
    let pieces = (knots.len() - 1) as f64;
    let piece_tol = Tolerance::new(tol.abs / pieces, tol.rel);
    let mut total = QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in knots.windows(2) {
        let r = if w[1].is_infinite() {
            exp_sinh(&mut f, w[0], scale, piece_tol)?
        } else {
            tanh_sinh(&mut f, w[0], w[1], piece_tol)?
        };
        total = total.add(r);
    }
    Ok(total)
}
