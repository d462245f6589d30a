//! Tail envelopes `|phi(u, v)| <~ eta_{a,b}(u) eta_{a~,b~}(v)` with
//! `eta_{a,b}(u) = u^a` for `u <= 1` and `u^b` for `u > 1`.

use serde::Serialize;

use super::{FunctionalKind, FunctionalSpec};

/// Default placeholder for the arbitrarily small exponent of log-type functionals.
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEnvelope {
    pub a: f64,
    pub b: f64,
    pub a_tilde: Option<f64>,
    pub b_tilde: Option<f64>,
    /// Fitted from the closed form of `phi` rather than taken from a published bound.
    pub derived: bool,
}

/// A consistency precondition that the envelope fails for the requested orders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EnvelopeViolation {
    /// Single density: consistency needs `a > -k`.
    LowerExponentSingle { a: f64, k: usize },
    /// Two densities: needs `a >= -k/2`.
    LowerExponentU { a: f64, k: usize },
    /// Two densities: needs `a~ >= -l/2`.
    LowerExponentV { a_tilde: f64, l: usize },
}

pub fn eta(a: f64, b: f64, u: f64) -> f64 {
    if u <= 1.0 {
        u.powf(a)
    } else {
        u.powf(b)
    }
}

impl TailEnvelope {
    fn single(a: f64, b: f64) -> Self {
        TailEnvelope {
            a,
            b,
            a_tilde: None,
            b_tilde: None,
            derived: false,
        }
    }

    fn two(a: f64, b: f64, at: f64, bt: f64, derived: bool) -> Self {
        TailEnvelope {
            a,
            b,
            a_tilde: Some(at),
            b_tilde: Some(bt),
            derived,
        }
    }

    /// `eta_{a,b}(u) * eta_{a~,b~}(v)` (the second factor only for two densities).
    pub fn bound(&self, u: f64, v: f64) -> f64 {
        let first = eta(self.a, self.b, u);
        match (self.a_tilde, self.b_tilde) {
            (Some(at), Some(bt)) => first * eta(at, bt, v),
            _ => first,
        }
    }

    /// Checks the lower-exponent preconditions of the consistency results.
    pub fn check(&self, k: usize, l: Option<usize>) -> Vec<EnvelopeViolation> {
        let mut out = Vec::new();
        match (self.a_tilde, l) {
            (Some(at), Some(l)) => {
                if self.a < -(k as f64) / 2.0 {
                    out.push(EnvelopeViolation::LowerExponentU { a: self.a, k });
                }
                if at < -(l as f64) / 2.0 {
                    out.push(EnvelopeViolation::LowerExponentV { a_tilde: at, l });
                }
            }
            _ => {
                if self.a <= -(k as f64) {
                    out.push(EnvelopeViolation::LowerExponentSingle { a: self.a, k });
                }
            }
        }
        out
    }
}

pub fn tail_envelope(spec: &FunctionalSpec) -> TailEnvelope {
    tail_envelope_with_epsilon(spec, DEFAULT_EPSILON)
}

/// Envelope exponents; `eps` replaces the arbitrarily small exponent of log factors.
pub fn tail_envelope_with_epsilon(spec: &FunctionalSpec, eps: f64) -> TailEnvelope {
    use FunctionalKind::*;
    match spec.kind() {
        Entropy => TailEnvelope::single(-eps, eps),
        RenyiEntropy { alpha } | GeneralizedEntropy { alpha, .. } => TailEnvelope::single(1.0 - alpha, 1.0 - alpha),
        KullbackLeibler => TailEnvelope::two(eps, eps, -eps, eps, false),
        GeneralizedBetaDivergence { beta } => TailEnvelope::two(1.0 - beta - eps, 1.0 - beta + eps, eps, eps, false),
        ReverseKullbackLeibler => TailEnvelope::two(1.0 - eps, 1.0 + eps, -1.0 - eps, -1.0 + eps, true),
        JensenShannon => TailEnvelope::two(0.0, 1.0, -1.0, 0.0, true),
        L2Squared => TailEnvelope::two(-1.0, 1.0, -2.0, 0.0, true),
        RenyiDivergence { alpha } => TailEnvelope::two(1.0 - alpha, 1.0 - alpha, alpha - 1.0, alpha - 1.0, false),
        Hellinger => TailEnvelope::two(0.5, 0.5, -0.5, -0.5, false),
        ChiSquared => TailEnvelope::two(0.0, 2.0, -2.0, 0.0, true),
        NnClassification => TailEnvelope::two(0.0, 0.0, 0.0, 0.0, true),
    }
}
