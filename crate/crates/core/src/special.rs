//! Special functions used by the estimator functions and the oracles.
//!
//! Gamma-family functions delegate to `statrs`; the thin wrappers fix the conventions
//! used across the crate (unnormalized incomplete gamma, log-space binomials).

use statrs::function::gamma as sg;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `H_n = sum_{j=1}^n 1/j`, with `H_0 = 0`.
pub fn harmonic(n: u32) -> f64 {
    (1..=n).rev().map(|j| 1.0 / j as f64).sum()
}

pub fn digamma(x: f64) -> f64 {
    sg::digamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    sg::ln_gamma(x)
}

pub fn gamma(x: f64) -> f64 {
    sg::gamma(x)
}

/// Lower incomplete gamma `gamma(s, x) = int_0^x t^{s-1} e^{-t} dt` (unnormalized).
pub fn lower_incomplete_gamma(s: f64, x: f64) -> f64 {
    sg::gamma_li(s, x)
}

/// Upper incomplete gamma `Gamma(s, x) = int_x^inf t^{s-1} e^{-t} dt` (unnormalized).
pub fn upper_incomplete_gamma(s: f64, x: f64) -> f64 {
    sg::gamma_ui(s, x)
}

/// Regularized lower incomplete gamma `P(s, x)`.
pub fn regularized_lower_gamma(s: f64, x: f64) -> f64 {
    sg::gamma_lr(s, x)
}

/// `ln C(n, i)` through log-gamma.
pub fn ln_binomial(n: u32, i: u32) -> f64 {
    debug_assert!(i <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((n - i) as f64 + 1.0)
}

pub fn binomial(n: u32, i: u32) -> f64 {
    if i > n {
        return 0.0;
    }
    ln_binomial(n, i).exp()
}

/// Log-density of Gamma(shape k, rate p) at `u`; `-inf` for `u <= 0` unless `k == 1`.
pub fn ln_gamma_pdf(u: f64, shape: f64, rate: f64) -> f64 {
    if u < 0.0 {
        return f64::NEG_INFINITY;
    }
    if u == 0.0 {
        return if shape == 1.0 {
            rate.ln()
        } else if shape < 1.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    shape * rate.ln() + (shape - 1.0) * u.ln() - rate * u - ln_gamma(shape)
}
