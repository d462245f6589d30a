//! Estimator functions `phi_k(u)` and `phi_{k,l}(u, v)`.
//!
//! [`EstimatorFunction`] precomputes everything that depends only on the functional and
//! the orders, so evaluating it inside the estimator (or inside quadrature) is cheap.
//! Gamma ratios are formed from log-gamma differences.

use crate::error::{Error, Result};
use crate::special::{binomial, harmonic, digamma, ln_gamma, EULER_GAMMA};

use super::{FunctionalKind, FunctionalSpec};

/// `c_{k,l} = sum_{j=0, j != l-1}^{k+l-2} C(k+l-2, j) (-1)^j / (l-1-j)`.
pub fn jsd_coefficient_c(k: usize, l: usize) -> Result<f64> {
    if k == 0 || l < 2 {
        return Err(Error::SideCondition(format!("need k >= 1 and l >= 2, got {k}, {l}")));
    }
    let n = (k + l - 2) as u32;
    let mut s = 0.0;
    for j in 0..=n {
        if j as usize == l - 1 {
            continue;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * binomial(n, j) / ((l as f64 - 1.0) - j as f64);
    }
    Ok(s)
}

/// Coefficients of the nearest-neighbour classification estimator function, written as
/// a polynomial in `w = u/v` below `w = 1` and in `1/w` above it.
#[derive(Debug, Clone)]
struct NnPoly {
    /// `a_j` for `j = 0..l-1`, `P(w) = sum a_j w^j` on `w < 1`.
    below: Vec<f64>,
    /// `b_j` for `j = 1..k-1`, `P(w) = sum b_j w^{-j}` on `w >= 1`.
    above: Vec<f64>,
    /// Constant of `Lambda(w) = int_0^w (1 - P(z)) / z dz` on `w >= 1`.
    lambda_const: f64,
}

impl NnPoly {
    fn new(k: usize, l: usize) -> NnPoly {
        let n = (k + l - 2) as u32;
        let b = binomial(n, (k - 1) as u32);
        // a_j = (-1)^j C(n, l-1-j) / B
        let below: Vec<f64> = (0..l)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(n, (l - 1 - j) as u32) / b
            })
            .collect();
        // For negative exponent -j: coefficient (-1)^{-j+1} C(n, l-1+j) / B.
        let above: Vec<f64> = (1..k)
            .map(|j| {
                let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
                sign * binomial(n, (l - 1 + j) as u32) / b
            })
            .collect();
        let mut lambda_const = 0.0;
        for (j, a) in below.iter().enumerate().skip(1) {
            lambda_const -= a / j as f64;
        }
        for (j, c) in above.iter().enumerate() {
            // -b_{-j} (0 - 1)/(-j) summed: contributes -c / j
            lambda_const -= c / (j + 1) as f64;
        }
        NnPoly {
            below,
            above,
            lambda_const,
        }
    }

    fn eval(&self, w: f64) -> f64 {
        if w < 1.0 {
            horner(&self.below, w)
        } else {
            let z = 1.0 / w;
            let mut acc = 0.0;
            for c in self.above.iter().rev() {
                acc = (acc + c) * z;
            }
            acc
        }
    }

    fn lambda(&self, w: f64) -> f64 {
        if w < 1.0 {
            let mut acc = 0.0;
            for (j, a) in self.below.iter().enumerate().skip(1).rev() {
                acc = acc * w + a / j as f64;
            }
            -acc * w
        } else {
            let z = 1.0 / w;
            let mut acc = 0.0;
            for (j, c) in self.above.iter().enumerate().rev() {
                acc = (acc + c / (j + 1) as f64) * z;
            }
            self.lambda_const + w.ln() + acc
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[derive(Debug, Clone)]
enum Kernel {
    Entropy { shift: f64 },
    Power { ln_coef: f64, expo: f64 },
    GenEntropy { ln_coef: f64, beta: f64, num: f64, den: f64 },
    Kl { shift: f64 },
    GenBeta { ln_coef: f64, expo: f64, shift: f64 },
    ReverseKl { coef: f64, shift: f64 },
    Jsd { coef: f64, shift: f64, main: NnPoly, peeled: NnPoly },
    L2 { c0: f64, c1: f64, c2: f64 },
    Ratio { ln_coef: f64, expo: f64 },
    Hellinger { ln_coef: f64 },
    Chi2 { coef: f64 },
    Nn(NnPoly),
}

/// A prepared estimator function for a fixed functional and fixed orders.
#[derive(Debug, Clone)]
pub struct EstimatorFunction {
    spec: FunctionalSpec,
    k: usize,
    l: Option<usize>,
    kernel: Kernel,
}

impl EstimatorFunction {
    /// Prepares `phi` for orders `k` (and `l` for divergences), checking side conditions.
    pub fn new(spec: &FunctionalSpec, k: usize, l: Option<usize>) -> Result<Self> {
        use FunctionalKind::*;
        spec.check_orders(k, l)?;
        let l = if spec.arity() == 2 { l } else { None };
        let kf = k as f64;
        let lf = l.unwrap_or(0) as f64;
        let hk = |n: usize| harmonic(n as u32);
        let kernel = match spec.kind() {
            Entropy => Kernel::Entropy {
                shift: EULER_GAMMA - hk(k - 1),
            },
            RenyiEntropy { alpha } => Kernel::Power {
                ln_coef: ln_gamma(kf) - ln_gamma(kf - alpha + 1.0),
                expo: 1.0 - alpha,
            },
            GeneralizedEntropy { alpha, beta } => Kernel::GenEntropy {
                ln_coef: ln_gamma(kf) - ln_gamma(kf - alpha + 1.0),
                beta,
                num: kf - alpha,
                den: kf - 1.0,
            },
            KullbackLeibler => Kernel::Kl {
                shift: hk(k - 1) - hk(l.unwrap() - 1),
            },
            GeneralizedBetaDivergence { beta } => Kernel::GenBeta {
                ln_coef: ln_gamma(kf) - ln_gamma(kf - beta + 1.0),
                expo: 1.0 - beta,
                shift: digamma(kf - beta + 1.0) - digamma(lf),
            },
            ReverseKullbackLeibler => Kernel::ReverseKl {
                coef: (lf - 1.0) / kf,
                shift: hk(l.unwrap() - 2) - hk(k),
            },
            JensenShannon => {
                let l = l.unwrap();
                Kernel::Jsd {
                    coef: (lf - 1.0) / kf,
                    shift: hk(l - 2) - hk(k),
                    main: NnPoly::new(k, l),
                    peeled: NnPoly::new(k + 1, l - 1),
                }
            }
            L2Squared => Kernel::L2 {
                c0: kf - 1.0,
                c1: 2.0 * (lf - 1.0),
                c2: (lf - 1.0) * (lf - 2.0) / kf,
            },
            RenyiDivergence { alpha } => Kernel::Ratio {
                ln_coef: ln_gamma(kf) + ln_gamma(lf) - ln_gamma(kf - alpha + 1.0) - ln_gamma(lf + alpha - 1.0),
                expo: 1.0 - alpha,
            },
            Hellinger => Kernel::Hellinger {
                ln_coef: ln_gamma(kf) + ln_gamma(lf) - ln_gamma(kf + 0.5) - ln_gamma(lf - 0.5),
            },
            ChiSquared => Kernel::Chi2 {
                coef: (lf - 1.0) * (lf - 2.0) / ((kf + 1.0) * kf),
            },
            NnClassification => Kernel::Nn(NnPoly::new(k, l.unwrap())),
        };
        Ok(EstimatorFunction {
            spec: *spec,
            k,
            l,
            kernel,
        })
    }

    pub fn spec(&self) -> &FunctionalSpec {
        &self.spec
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> Option<usize> {
        self.l
    }

    /// Points where `phi` (as a function of `u`, or of `v` for fixed `u`) is not smooth.
    /// Used to place quadrature breakpoints.
    pub(crate) fn kink_in_u(&self) -> Option<f64> {
        match self.kernel {
            Kernel::GenEntropy { beta, .. } if beta > 0.0 => Some(beta),
            _ => None,
        }
    }

    pub(crate) fn kinks_at_diagonal(&self) -> bool {
        matches!(self.kernel, Kernel::Jsd { .. } | Kernel::Nn(_))
    }

    /// Raw evaluation. Non-finite results are possible at the edges of the domain
    /// (e.g. `u = 0` for entropy); callers decide how to treat them. `v` is ignored for
    /// single-density functionals.
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match &self.kernel {
            Kernel::Entropy { shift } => u.ln() + shift,
            Kernel::Power { ln_coef, expo } => pow_exp(*ln_coef, *expo, u),
            Kernel::GenEntropy { ln_coef, beta, num, den } => {
                if u < *beta {
                    0.0
                } else if u == *beta {
                    // 0^x with 0^0 = 1
                    if *num == 0.0 {
                        (ln_coef - den * u.ln()).exp()
                    } else if *num > 0.0 {
                        0.0
                    } else {
                        f64::NAN
                    }
                } else {
                    (ln_coef + num * (u - beta).ln() - den * u.ln()).exp()
                }
            }
            Kernel::Kl { shift } => shift - (u / v).ln(),
            Kernel::GenBeta { ln_coef, expo, shift } => pow_exp(*ln_coef, *expo, u) * (shift - (u / v).ln()),
            Kernel::ReverseKl { coef, shift } => {
                let w = u / v;
                coef * w * (w.ln() + shift)
            }
            Kernel::Jsd { coef, shift, main, peeled } => {
                let w = u / v;
                let tw = coef * w;
                let ln2 = std::f64::consts::LN_2;
                let a = (tw + 1.0) * ln2 + tw * (w.ln() + shift);
                let g = main.lambda(w) + tw * peeled.lambda(w);
                if w == 0.0 {
                    ln2
                } else {
                    a - g
                }
            }
            Kernel::L2 { c0, c1, c2 } => c0 / u - c1 / v + c2 * u / (v * v),
            Kernel::Ratio { ln_coef, expo } => pow_exp(*ln_coef, *expo, u / v),
            Kernel::Hellinger { ln_coef } => 2.0 * (1.0 - (ln_coef + 0.5 * (u / v).ln()).exp()),
            Kernel::Chi2 { coef } => {
                let w = u / v;
                coef * w * w - 1.0
            }
            Kernel::Nn(poly) => poly.eval(u / v),
        }
    }
}

/// `exp(ln_coef) * x^expo` with `0^expo` handled by sign of `expo`.
fn pow_exp(ln_coef: f64, expo: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if expo > 0.0 {
            0.0
        } else if expo == 0.0 {
            ln_coef.exp()
        } else {
            f64::INFINITY
        };
    }
    (ln_coef + expo * x.ln()).exp()
}

fn checked(spec: &FunctionalSpec, value: f64, u: f64, v: Option<f64>) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!(
            "estimator function of {spec} is not finite at u = {u}{}",
            v.map_or(String::new(), |v| format!(", v = {v}"))
        )))
    }
}

/// `phi_k(u)` for a single-density functional.
pub fn phi_single(spec: &FunctionalSpec, k: usize, u: f64) -> Result<f64> {
    if spec.arity() != 1 {
        return Err(Error::InvalidParameter(format!("{spec} is a two-density functional")));
    }
    if !(u >= 0.0) {
        return Err(Error::Domain(format!("u must be non-negative, got {u}")));
    }
    let phi = EstimatorFunction::new(spec, k, None)?;
    checked(spec, phi.eval(u, f64::NAN), u, None)
}

/// `phi_{k,l}(u, v)` for a two-density functional.
pub fn phi_two(spec: &FunctionalSpec, k: usize, l: usize, u: f64, v: f64) -> Result<f64> {
    if spec.arity() != 2 {
        return Err(Error::InvalidParameter(format!("{spec} is a single-density functional")));
    }
    if !(u >= 0.0) || !(v > 0.0) {
        return Err(Error::Domain(format!("need u >= 0 and v > 0, got u = {u}, v = {v}")));
    }
    let phi = EstimatorFunction::new(spec, k, Some(l))?;
    checked(spec, phi.eval(u, v), u, Some(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(s: &str) -> FunctionalSpec {
        s.parse().unwrap()
    }

    #[test]
    fn single_examples() {
        assert_relative_eq!(phi_single(&spec("entropy"), 2, 1.0).unwrap(), EULER_GAMMA - 1.0, epsilon = 1e-15);
        assert_relative_eq!(phi_single(&spec("renyi-entropy:2"), 3, 2.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(phi_single(&spec("gen-entropy:2,1"), 3, 0.5).unwrap(), 0.0);
        assert!(phi_single(&spec("entropy"), 1, 0.0).is_err());
        assert!(phi_single(&spec("renyi-entropy:4"), 3, 1.0).is_err());
    }

    #[test]
    fn gen_entropy_at_threshold() {
        // (u - beta)^{k - alpha} at zero base: 0^1 = 0, 0^0 = 1, 0^{-1} undefined.
        assert_eq!(phi_single(&spec("gen-entropy:2,1"), 3, 1.0).unwrap(), 0.0);
        let v = phi_single(&spec("gen-entropy:3,2"), 3, 2.0).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-13);
        assert!(phi_single(&spec("gen-entropy:3.5,2"), 3, 2.0).is_err());
    }

    #[test]
    fn two_examples() {
        assert_relative_eq!(phi_two(&spec("kl"), 3, 3, 1.7, 1.7).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(
            phi_two(&spec("kl"), 2, 3, 1.0, 2.0).unwrap(),
            2f64.ln() + 1.0 - 1.5,
            epsilon = 1e-15
        );
        // (l-1)(l-2)/((k+1)k) (u/v)^2 - 1 = 0.25 - 1
        assert_relative_eq!(phi_two(&spec("chi2"), 1, 3, 1.0, 2.0).unwrap(), -0.75, epsilon = 1e-14);
        assert_relative_eq!(phi_two(&spec("chi2"), 1, 3, 2.0, 1.0).unwrap(), 3.0, epsilon = 1e-14);
        let h = phi_two(&spec("hellinger"), 2, 2, 1.0, 1.0).unwrap();
        assert_relative_eq!(h, 2.0 * (1.0 - 8.0 / (3.0 * std::f64::consts::PI)), epsilon = 1e-14);
    }

    #[test]
    fn jsd_c_examples() {
        assert_relative_eq!(jsd_coefficient_c(1, 2).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(jsd_coefficient_c(2, 2).unwrap(), 0.0, epsilon = 1e-15);
        assert!(jsd_coefficient_c(1, 1).is_err());
    }

    #[test]
    fn nn_consistency() {
        // k = l = 1 reduces to the indicator of u < v.
        let s = spec("nn-class");
        assert_eq!(phi_two(&s, 1, 1, 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(phi_two(&s, 1, 1, 1.0, 1.0).unwrap(), 0.0);
        // continuity at u = v for k, l >= 2
        let below = phi_two(&s, 3, 4, 1.0 - 1e-9, 1.0).unwrap();
        let above = phi_two(&s, 3, 4, 1.0, 1.0).unwrap();
        assert!((below - above).abs() < 1e-7);
    }

    #[test]
    fn jsd_limits() {
        let s = spec("jsd");
        assert_relative_eq!(phi_two(&s, 2, 3, 0.0, 1.0).unwrap(), std::f64::consts::LN_2);
        let below = phi_two(&s, 2, 3, 1.0 - 1e-10, 1.0).unwrap();
        let above = phi_two(&s, 2, 3, 1.0, 1.0).unwrap();
        assert!((below - above).abs() < 1e-7);
    }
}
