//! Theoretical bias and MSE exponents. Generic over the scalar so that tables can be
//! checked in exact rational arithmetic as well as in `f64`.

use std::fmt::Debug;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Field operations needed by the exponent formulas.
pub trait RateScalar:
    Copy
    + Debug
    + PartialOrd
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn from_int(i: i64) -> Self;
    fn to_f64(self) -> f64;
}

impl RateScalar for f64 {
    fn from_int(i: i64) -> Self {
        i as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl RateScalar for Rational64 {
    fn from_int(i: i64) -> Self {
        Rational64::from_integer(i)
    }
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

fn min<T: RateScalar>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

fn min_all<T: RateScalar>(xs: &[T]) -> T {
    xs.iter().copied().reduce(min).expect("non-empty")
}

/// Position of a tail exponent relative to the thresholds `-sigma/d - 1` and `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRegime {
    /// `a < -sigma/d - 1`
    Heavy,
    /// `-sigma/d - 1 <= a < -1`
    Moderate,
    /// `a >= -1`
    Light,
}

fn regime<T: RateScalar>(sigma: T, a: T, d: T) -> TailRegime {
    let one = T::one();
    if a < -(sigma / d) - one {
        TailRegime::Heavy
    } else if a < -one {
        TailRegime::Moderate
    } else {
        TailRegime::Light
    }
}

/// Caveats attached to an exponent; none of them is an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFlag {
    /// The cell is known not to be the best achievable rate.
    Suboptimal,
    /// The side condition `(k+a)(l+a~) > (a+1)(a~+1)` fails.
    PositivityConditionFails,
    /// `k = 1` (or `l = 1`) with a tail exponent below `-1`: no schedule exists.
    ScheduleUndefined,
    /// The bias exponent is not positive; no rate is guaranteed.
    NoGuarantee,
    /// The variance term is unbounded under a zero lower truncation point.
    VarianceUnbounded,
    /// The envelope violates the lower-exponent precondition of consistency.
    EnvelopePrecondition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateExponents<T> {
    /// Bias exponent: bias of order `m^{-lambda}`.
    pub lambda: T,
    /// Variance exponent: variance of order `m^{-variance_exponent}`.
    pub variance_exponent: T,
    /// `min(2 lambda, variance_exponent)`, floored at 0.
    pub mse_exponent: T,
    pub regime: TailRegime,
    pub regime_tilde: Option<TailRegime>,
    pub flags: Vec<RateFlag>,
}

impl<T: RateScalar> RateExponents<T> {
    pub fn to_f64(&self) -> RateExponents<f64> {
        RateExponents {
            lambda: self.lambda.to_f64(),
            variance_exponent: self.variance_exponent.to_f64(),
            mse_exponent: self.mse_exponent.to_f64(),
            regime: self.regime,
            regime_tilde: self.regime_tilde,
            flags: self.flags.clone(),
        }
    }

    pub fn has(&self, flag: &RateFlag) -> bool {
        self.flags.contains(flag)
    }
}

fn check_common<T: RateScalar>(sigma: T, k: usize, d: usize) -> Result<()> {
    if !(sigma > T::zero() && sigma <= T::from_int(2)) {
        return Err(Error::InvalidParameter(format!(
            "smoothness must lie in (0, 2], got {sigma:?}"
        )));
    }
    if k == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!("need k >= 1 and d >= 1, got {k}, {d}")));
    }
    Ok(())
}

struct SingleParts<T> {
    lambda: T,
    /// `e` with `alpha_m = m^{-e}`; `None` when `alpha_m = 0`.
    lower_exponent: Option<T>,
    regime: TailRegime,
    flags: Vec<RateFlag>,
}

fn single_parts<T: RateScalar>(sigma: T, a: T, k: usize, d: usize) -> SingleParts<T> {
    let one = T::one();
    let df = T::from_int(d as i64);
    let kf = T::from_int(k as i64);
    let s1 = min(sigma, one);
    let reg = regime(sigma, a, df);
    let mut flags = Vec::new();
    if a <= -kf {
        flags.push(RateFlag::EnvelopePrecondition);
    }
    let (lambda, lower_exponent) = match reg {
        TailRegime::Heavy | TailRegime::Moderate if k == 1 => {
            flags.push(RateFlag::ScheduleUndefined);
            (T::zero(), None)
        }
        TailRegime::Heavy => {
            let km1 = kf - one;
            (s1 * (kf + a) / (df * km1), Some(s1 / (df * km1)))
        }
        TailRegime::Moderate => {
            let km1 = kf - one;
            let lam = min_all(&[sigma, (kf + a) / km1, one]) / df;
            (lam, Some(one / (df * km1)))
        }
        TailRegime::Light => {
            let lam = if k == 1 {
                // (k + a)/(k - 1) is +inf here when k + a > 0.
                if kf + a > T::zero() {
                    min(sigma, one) / df
                } else {
                    T::zero()
                }
            } else {
                min_all(&[sigma, (kf + a) / (kf - one), one]) / df
            };
            (lam, None)
        }
    };
    if !(lambda > T::zero()) && !flags.contains(&RateFlag::ScheduleUndefined) {
        flags.push(RateFlag::NoGuarantee);
    }
    SingleParts {
        lambda,
        lower_exponent,
        regime: reg,
        flags,
    }
}

/// Exponents for a single-density functional with envelope lower exponent `a`, order `k`,
/// smoothness `sigma` and dimension `d`, under the default truncation schedule.
pub fn theoretical_exponent_single<T: RateScalar>(sigma: T, a: T, k: usize, d: usize) -> Result<RateExponents<T>> {
    check_common(sigma, k, d)?;
    let parts = single_parts(sigma, a, k, d);
    let mut flags = parts.flags;
    let one = T::one();
    let two = T::from_int(2);
    let deterioration = min(two * a + T::from_int(k as i64), T::zero());
    let variance_exponent = if deterioration == T::zero() {
        one
    } else {
        match parts.lower_exponent {
            // alpha_m^{(2a+k)} / m = m^{-e (2a+k)} / m
            Some(e) => one + e * deterioration,
            None => {
                flags.push(RateFlag::VarianceUnbounded);
                T::zero()
            }
        }
    };
    let mut mse = min(two * parts.lambda, variance_exponent);
    if mse < T::zero() {
        mse = T::zero();
    }
    Ok(RateExponents {
        lambda: parts.lambda,
        variance_exponent,
        mse_exponent: mse,
        regime: parts.regime,
        regime_tilde: None,
        flags,
    })
}

/// Exponents for a two-density functional with `m = n`. The lower-triangular cells of
/// the exponent table follow from exchanging `(sigma, a, k)` with `(tau, a~, l)`.
#[allow(clippy::too_many_arguments)]
pub fn theoretical_exponent_two<T: RateScalar>(
    sigma: T,
    a: T,
    k: usize,
    tau: T,
    a_tilde: T,
    l: usize,
    d: usize,
) -> Result<RateExponents<T>> {
    check_common(sigma, k, d)?;
    check_common(tau, l, d)?;
    let one = T::one();
    let two = T::from_int(2);
    let df = T::from_int(d as i64);
    let kf = T::from_int(k as i64);
    let lf = T::from_int(l as i64);
    let s1 = min(sigma, one);
    let t1 = min(tau, one);
    let ru = regime(sigma, a, df);
    let rv = regime(tau, a_tilde, df);
    let mut flags = Vec::new();
    if a < -kf / two || a_tilde < -lf / two {
        flags.push(RateFlag::EnvelopePrecondition);
    }
    let positivity = (kf + a) * (lf + a_tilde) > (a + one) * (a_tilde + one);
    let lambda = if ru == TailRegime::Light || rv == TailRegime::Light {
        let pu = single_parts(sigma, a, k, d);
        let pv = single_parts(tau, a_tilde, l, d);
        for f in pu.flags.into_iter().chain(pv.flags) {
            if f != RateFlag::EnvelopePrecondition && f != RateFlag::NoGuarantee && !flags.contains(&f) {
                flags.push(f);
            }
        }
        min(pu.lambda, pv.lambda)
    } else if k == 1 || l == 1 {
        flags.push(RateFlag::ScheduleUndefined);
        T::zero()
    } else {
        let km1 = kf - one;
        let lm1 = lf - one;
        let ua = (a + one) / km1;
        let va = (a_tilde + one) / lm1;
        if !positivity {
            flags.push(RateFlag::PositivityConditionFails);
        }
        match (ru, rv) {
            (TailRegime::Heavy, TailRegime::Heavy) => {
                flags.push(RateFlag::Suboptimal);
                (min_all(&[sigma, tau, one]) + s1 * ua + t1 * va) / df
            }
            (TailRegime::Heavy, TailRegime::Moderate) => {
                flags.push(RateFlag::Suboptimal);
                min_all(&[s1 * (kf + a) / km1, tau, (lf + a_tilde) / lm1, one + s1 * ua + va]) / df
            }
            (TailRegime::Moderate, TailRegime::Heavy) => {
                flags.push(RateFlag::Suboptimal);
                min_all(&[t1 * (lf + a_tilde) / lm1, sigma, (kf + a) / km1, one + t1 * va + ua]) / df
            }
            _ => min_all(&[sigma, tau, one + ua + va]) / df,
        }
    };
    if !(lambda > T::zero()) && !flags.contains(&RateFlag::ScheduleUndefined) {
        flags.push(RateFlag::NoGuarantee);
    }
    let mut mse = min(two * lambda, one);
    if mse < T::zero() {
        mse = T::zero();
    }
    Ok(RateExponents {
        lambda,
        variance_exponent: one,
        mse_exponent: mse,
        regime: ru,
        regime_tilde: Some(rv),
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn single_examples() {
        let e = theoretical_exponent_single(r(2, 1), r(0, 1), 5, 2).unwrap();
        assert_eq!((e.lambda, e.mse_exponent), (r(1, 2), r(1, 1)));
        let e = theoretical_exponent_single(r(2, 1), r(-2, 1), 4, 3).unwrap();
        assert_eq!((e.lambda, e.mse_exponent), (r(2, 9), r(4, 9)));
        let e = theoretical_exponent_single(r(1, 1), r(0, 1), 2, 1).unwrap();
        assert_eq!((e.lambda, e.mse_exponent), (r(1, 1), r(1, 1)));
        assert!(theoretical_exponent_single(r(3, 1), r(0, 1), 2, 1).is_err());
    }

    #[test]
    fn variance_deterioration() {
        // a = -3, k = 4: 2a + k = -2; moderate regime with sigma = 2, d = 1: e = 1/3.
        let e = theoretical_exponent_single(r(2, 1), r(-3, 1), 4, 1).unwrap();
        assert_eq!(e.variance_exponent, r(1, 3));
        assert_eq!(e.lambda, r(1, 3));
        assert_eq!(e.mse_exponent, r(1, 3));
        // k = 1 with a heavy tail has no schedule.
        let e = theoretical_exponent_single(r(2, 1), r(-2, 1), 1, 2).unwrap();
        assert!(e.has(&RateFlag::ScheduleUndefined));
    }

    #[test]
    fn two_examples() {
        let eps = r(1, 100);
        let e = theoretical_exponent_two(r(2, 1), eps, 5, r(2, 1), -eps, 5, 2).unwrap();
        assert_eq!((e.lambda, e.mse_exponent), (r(1, 2), r(1, 1)));
        let e = theoretical_exponent_two(r(2, 1), r(-2, 1), 4, r(2, 1), r(2, 1), 4, 3).unwrap();
        assert_eq!(e.mse_exponent, r(4, 9));
    }

    #[test]
    fn symmetric_fill() {
        let a = theoretical_exponent_two(r(2, 1), r(-3, 1), 5, r(1, 1), r(-7, 5), 6, 2).unwrap();
        let b = theoretical_exponent_two(r(1, 1), r(-7, 5), 6, r(2, 1), r(-3, 1), 5, 2).unwrap();
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.regime, TailRegime::Heavy);
        assert_eq!(a.regime_tilde, Some(TailRegime::Moderate));
        assert!(a.has(&RateFlag::Suboptimal));
    }

    #[test]
    fn f64_agrees_with_rational() {
        let q = theoretical_exponent_two(r(3, 2), r(-5, 2), 6, r(2, 1), r(-9, 4), 5, 2).unwrap();
        let f = theoretical_exponent_two(1.5, -2.5, 6, 2.0, -2.25, 5, 2).unwrap();
        assert!((q.lambda.to_f64() - f.lambda).abs() < 1e-15);
    }
}
