//! The functional catalogue: each functional's defining `f`, its estimator function
//! `phi`, its tail envelope and the Gamma-law identity that `phi` must satisfy.

mod envelope;
mod oracle;
mod phi;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use envelope::{eta, tail_envelope, tail_envelope_with_epsilon, EnvelopeViolation, TailEnvelope, DEFAULT_EPSILON};
pub use oracle::{gamma_expectation, gamma_oracle_residual, GammaExpectation};
pub use phi::{jsd_coefficient_c, phi_single, phi_two, EstimatorFunction};

/// Which functional, with its real parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    /// `-E log p`
    Entropy,
    /// `E p^{alpha-1}`
    RenyiEntropy { alpha: f64 },
    /// `E p^{alpha-1} exp(-beta p)`
    GeneralizedEntropy { alpha: f64, beta: f64 },
    /// `E log(p/q)`
    KullbackLeibler,
    /// `E p^{beta-1} log(p/q)`
    GeneralizedBetaDivergence { beta: f64 },
    /// `E (q/p) log(q/p)`
    ReverseKullbackLeibler,
    /// `E (r+1) log(2/(r+1)) + r log r` with `r = q/p`
    JensenShannon,
    /// `E (p-q)^2 / p`
    L2Squared,
    /// `E (q/p)^{1-alpha}`
    RenyiDivergence { alpha: f64 },
    /// `E 2 (1 - sqrt(q/p))`
    Hellinger,
    /// `E (q/p)^2 - 1`
    ChiSquared,
    /// `E p / (p + q)`
    NnClassification,
}

/// A validated functional. Constructed through [`FunctionalSpec::new`] or parsed from its
/// command-line name (`entropy`, `renyi-entropy:<a>`, `gen-entropy:<a>,<b>`, `kl`,
/// `gen-beta:<b>`, `reverse-kl`, `jsd`, `l2sq`, `renyi-div:<a>`, `hellinger`, `chi2`,
/// `nn-class`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FunctionalSpec {
    kind: FunctionalKind,
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {x}")))
    }
}

impl FunctionalSpec {
    pub fn new(kind: FunctionalKind) -> Result<Self> {
        use FunctionalKind::*;
        match kind {
            RenyiEntropy { alpha } | RenyiDivergence { alpha } => {
                finite("alpha", alpha)?;
                if alpha < 0.0 || alpha == 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "alpha must be non-negative and different from 1, got {alpha}"
                    )));
                }
            }
            GeneralizedEntropy { alpha, beta } => {
                finite("alpha", alpha)?;
                finite("beta", beta)?;
                if alpha < 0.0 || beta < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "alpha and beta must be non-negative, got {alpha}, {beta}"
                    )));
                }
            }
            GeneralizedBetaDivergence { beta } => finite("beta", beta)?,
            _ => {}
        }
        Ok(FunctionalSpec { kind })
    }

    pub fn kind(&self) -> FunctionalKind {
        self.kind
    }

    /// 1 for single-density functionals, 2 for divergences.
    pub fn arity(&self) -> usize {
        use FunctionalKind::*;
        match self.kind {
            Entropy | RenyiEntropy { .. } | GeneralizedEntropy { .. } => 1,
            _ => 2,
        }
    }

    /// Every functional in the catalogue with representative parameters.
    pub fn catalogue() -> Vec<FunctionalSpec> {
        use FunctionalKind::*;
        [
            Entropy,
            RenyiEntropy { alpha: 2.0 },
            GeneralizedEntropy { alpha: 2.0, beta: 0.5 },
            KullbackLeibler,
            GeneralizedBetaDivergence { beta: 3.0 },
            ReverseKullbackLeibler,
            JensenShannon,
            L2Squared,
            RenyiDivergence { alpha: 0.5 },
            Hellinger,
            ChiSquared,
            NnClassification,
        ]
        .into_iter()
        .map(|kind| FunctionalSpec { kind })
        .collect()
    }

    /// Checks the order constraints under which `phi` exists.
    pub fn check_orders(&self, k: usize, l: Option<usize>) -> Result<()> {
        use FunctionalKind::*;
        if k == 0 {
            return Err(Error::SideCondition("k must be at least 1".into()));
        }
        let l = if self.arity() == 2 {
            match l {
                Some(0) => return Err(Error::SideCondition("l must be at least 1".into())),
                Some(l) => l,
                None => return Err(Error::SideCondition(format!("{self} needs an order l"))),
            }
        } else {
            0
        };
        let kf = k as f64;
        let lf = l as f64;
        let fail = |msg: String| Err(Error::SideCondition(msg));
        match self.kind {
            RenyiEntropy { alpha } | GeneralizedEntropy { alpha, .. } if kf <= alpha - 1.0 => {
                fail(format!("need k > alpha - 1, got k = {k}, alpha = {alpha}"))
            }
            GeneralizedBetaDivergence { beta } if kf <= beta - 1.0 => {
                fail(format!("need k > beta - 1, got k = {k}, beta = {beta}"))
            }
            RenyiDivergence { alpha } if kf <= alpha - 1.0 || lf <= 1.0 - alpha => fail(format!(
                "need k > alpha - 1 and l > 1 - alpha, got k = {k}, l = {l}, alpha = {alpha}"
            )),
            ReverseKullbackLeibler | JensenShannon if l < 2 => fail(format!("need l >= 2, got {l}")),
            ChiSquared if l < 3 => fail(format!("need l >= 3, got {l}")),
            L2Squared if k < 2 || l < 3 => fail(format!("need k >= 2 and l >= 3, got {k}, {l}")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FunctionalKind::*;
        match self.kind {
            Entropy => write!(f, "entropy"),
            RenyiEntropy { alpha } => write!(f, "renyi-entropy:{alpha}"),
            GeneralizedEntropy { alpha, beta } => write!(f, "gen-entropy:{alpha},{beta}"),
            KullbackLeibler => write!(f, "kl"),
            GeneralizedBetaDivergence { beta } => write!(f, "gen-beta:{beta}"),
            ReverseKullbackLeibler => write!(f, "reverse-kl"),
            JensenShannon => write!(f, "jsd"),
            L2Squared => write!(f, "l2sq"),
            RenyiDivergence { alpha } => write!(f, "renyi-div:{alpha}"),
            Hellinger => write!(f, "hellinger"),
            ChiSquared => write!(f, "chi2"),
            NnClassification => write!(f, "nn-class"),
        }
    }
}

fn parse_params(name: &str, args: Option<&str>, count: usize) -> Result<Vec<f64>> {
    let args = args.ok_or_else(|| Error::Parse(format!("{name} needs {count} parameter(s)")))?;
    let vals = args
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad parameter {s:?} for {name}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != count {
        return Err(Error::Parse(format!(
            "{name} needs {count} parameter(s), got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

impl FromStr for FunctionalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use FunctionalKind::*;
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let no_args = |kind| {
            if args.is_some() {
                Err(Error::Parse(format!("{name} takes no parameters")))
            } else {
                Ok(kind)
            }
        };
        let kind = match name {
            "entropy" => no_args(Entropy)?,
            "renyi-entropy" => RenyiEntropy {
                alpha: parse_params(name, args, 1)?[0],
            },
            "gen-entropy" => {
                let p = parse_params(name, args, 2)?;
                GeneralizedEntropy {
                    alpha: p[0],
                    beta: p[1],
                }
            }
            "kl" => no_args(KullbackLeibler)?,
            "gen-beta" => GeneralizedBetaDivergence {
                beta: parse_params(name, args, 1)?[0],
            },
            "reverse-kl" => no_args(ReverseKullbackLeibler)?,
            "jsd" => no_args(JensenShannon)?,
            "l2sq" => no_args(L2Squared)?,
            "renyi-div" => RenyiDivergence {
                alpha: parse_params(name, args, 1)?[0],
            },
            "hellinger" => no_args(Hellinger)?,
            "chi2" => no_args(ChiSquared)?,
            "nn-class" => no_args(NnClassification)?,
            other => return Err(Error::Parse(format!("unknown functional {other:?}"))),
        };
        FunctionalSpec::new(kind)
    }
}

impl TryFrom<String> for FunctionalSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FunctionalSpec> for String {
    fn from(s: FunctionalSpec) -> String {
        s.to_string()
    }
}

/// `f(p)` or `f(p, q)` at non-negative density values.
pub fn f_value(spec: &FunctionalSpec, p: f64, q: Option<f64>) -> Result<f64> {
    use FunctionalKind::*;
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("density value {p} is not a finite non-negative number")));
    }
    let q = if spec.arity() == 2 {
        let q = q.ok_or_else(|| Error::InvalidParameter(format!("{spec} needs a second density value")))?;
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::Domain(format!("density value {q} is not a finite non-negative number")));
        }
        q
    } else {
        0.0
    };
    let r = q / p;
    let v = match spec.kind {
        Entropy => -p.ln(),
        RenyiEntropy { alpha } => p.powf(alpha - 1.0),
        GeneralizedEntropy { alpha, beta } => p.powf(alpha - 1.0) * (-beta * p).exp(),
        KullbackLeibler => (p / q).ln(),
        GeneralizedBetaDivergence { beta } => p.powf(beta - 1.0) * (p / q).ln(),
        ReverseKullbackLeibler => xlogx(r),
        JensenShannon => (r + 1.0) * (2.0 / (r + 1.0)).ln() + xlogx(r),
        L2Squared => (p - q) * (p - q) / p,
        RenyiDivergence { alpha } => r.powf(1.0 - alpha),
        Hellinger => 2.0 * (1.0 - r.sqrt()),
        ChiSquared => r * r - 1.0,
        NnClassification => p / (p + q),
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{spec} is not finite at p = {p}, q = {q}")))
    }
}

/// `x log x` with the continuous extension `0 log 0 = 0`.
pub(crate) fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}
