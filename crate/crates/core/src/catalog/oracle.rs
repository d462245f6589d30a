//! The Gamma-law identity `E[phi(U)] = f(p)` with `U ~ Gamma(k, p)`, and its two-density
//! analogue with an independent `V ~ Gamma(l, q)`, checked by quadrature.

use std::cell::Cell;

use crate::error::{Error, Result};
use crate::quadrature::{exp_sinh, integrate_pieces, Tolerance};
use crate::special::ln_gamma;

use super::{f_value, EstimatorFunction, FunctionalSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaExpectation {
    /// `E[phi]` by quadrature.
    pub expectation: f64,
    /// `f(p)` or `f(p, q)`.
    pub target: f64,
    /// Quadrature error estimate.
    pub error: f64,
}

impl GammaExpectation {
    pub fn residual(&self) -> f64 {
        self.expectation - self.target
    }
}

struct GammaDensity {
    shape: f64,
    rate: f64,
    ln_norm: f64,
}

impl GammaDensity {
    fn new(shape: usize, rate: f64) -> Self {
        let shape = shape as f64;
        GammaDensity {
            shape,
            rate,
            ln_norm: shape * rate.ln() - ln_gamma(shape),
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return if x == 0.0 && self.shape == 1.0 { self.rate } else { 0.0 };
        }
        (self.ln_norm + (self.shape - 1.0) * x.ln() - self.rate * x).exp()
    }

    fn mean(&self) -> f64 {
        self.shape / self.rate
    }
}

/// `E[phi]` under the Gamma law, at relative/absolute quadrature tolerance `tol`.
pub fn gamma_expectation(
    spec: &FunctionalSpec,
    k: usize,
    l: Option<usize>,
    p: f64,
    q: Option<f64>,
    tol: f64,
) -> Result<GammaExpectation> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("rate p must be positive, got {p}")));
    }
    let phi = EstimatorFunction::new(spec, k, l)?;
    let target = f_value(spec, p, q)?;
    let gu = GammaDensity::new(k, p);
    let outer_tol = Tolerance::new(tol, tol);
    let res = if spec.arity() == 1 {
        let integrand = |u: f64| {
            let w = gu.pdf(u);
            if w == 0.0 {
                0.0
            } else {
                w * phi.eval(u, f64::NAN)
            }
        };
        match phi.kink_in_u() {
            Some(beta) => exp_sinh(integrand, beta, gu.mean().max(beta), outer_tol)?,
            None => exp_sinh(integrand, 0.0, gu.mean(), outer_tol)?,
        }
    } else {
        let q = q.ok_or_else(|| Error::InvalidParameter(format!("{spec} needs a rate q")))?;
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate q must be positive, got {q}")));
        }
        let gv = GammaDensity::new(l.unwrap_or(0), q);
        let inner_tol = Tolerance::new(tol * 0.1, tol * 0.1);
        let inner_failure: Cell<Option<Error>> = Cell::new(None);
        let split = phi.kinks_at_diagonal();
        let inner = |u: f64| -> f64 {
            let g = |v: f64| {
                let w = gv.pdf(v);
                if w == 0.0 {
                    0.0
                } else {
                    w * phi.eval(u, v)
                }
            };
            let r = if split && u > 0.0 {
                integrate_pieces(g, 0.0, f64::INFINITY, &[u], gv.mean(), inner_tol)
            } else {
                exp_sinh(g, 0.0, gv.mean(), inner_tol)
            };
            match r {
                Ok(r) => r.value,
                Err(e) => {
                    inner_failure.set(Some(e));
                    f64::NAN
                }
            }
        };
        let outer = |u: f64| {
            let w = gu.pdf(u);
            if w == 0.0 {
                0.0
            } else {
                w * inner(u)
            }
        };
        let r = exp_sinh(outer, 0.0, gu.mean(), outer_tol);
        if let Some(e) = inner_failure.take() {
            return Err(e);
        }
        r?
    };
    Ok(GammaExpectation {
        expectation: res.value,
        target,
        error: res.error,
    })
}

/// `E[phi] - f` at the default quadrature tolerance `1e-9`.
pub fn gamma_oracle_residual(
    spec: &FunctionalSpec,
    k: usize,
    l: Option<usize>,
    p: f64,
    q: Option<f64>,
) -> Result<f64> {
    Ok(gamma_expectation(spec, k, l, p, q, 1e-9)?.residual())
}
