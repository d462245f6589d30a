//! Truncation windows `[alpha_m, beta_m]` for the k-NN volumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An inclusive window `[lower, upper]`; `upper` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lower: f64,
    pub upper: f64,
}

impl Window {
    pub const UNBOUNDED: Window = Window {
        lower: 0.0,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0) || lower.is_infinite() || !(upper >= lower) {
            return Err(Error::InvalidParameter(format!(
                "truncation window needs 0 <= lower <= upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Window { lower, upper })
    }

    #[inline]
    pub fn contains(&self, u: f64) -> bool {
        u >= self.lower && u <= self.upper
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower == 0.0 && self.upper == f64::INFINITY
    }
}

impl Default for Window {
    fn default() -> Self {
        Window::UNBOUNDED
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum LowerRule {
    Zero,
    /// `constant * m^exponent`, `exponent <= 0`.
    Power { exponent: f64, constant: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum UpperRule {
    Infinite,
    /// `constant * (ln m)^power`, `power > 1`.
    PolyLog { power: f64, constant: f64 },
}

/// Schedule constants; both default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConstants {
    pub c_alpha: f64,
    pub c_beta: f64,
}

impl Default for ScheduleConstants {
    fn default() -> Self {
        ScheduleConstants {
            c_alpha: 1.0,
            c_beta: 1.0,
        }
    }
}

/// Power of `ln m` in the upper truncation point.
pub const UPPER_POLYLOG_POWER: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSchedule {
    pub lower: LowerRule,
    pub upper: UpperRule,
}

impl TruncationSchedule {
    pub fn new(lower: LowerRule, upper: UpperRule) -> Result<Self> {
        if let LowerRule::Power { exponent, constant } = lower {
            if !(exponent <= 0.0) || !(constant > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "lower rule needs exponent <= 0 and positive constant, got {exponent}, {constant}"
                )));
            }
        }
        if let UpperRule::PolyLog { power, constant } = upper {
            if !(power > 1.0) || !(constant > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "upper rule needs power > 1 and positive constant, got {power}, {constant}"
                )));
            }
        }
        Ok(TruncationSchedule { lower, upper })
    }

    /// No truncation at any sample size.
    pub fn none() -> Self {
        TruncationSchedule {
            lower: LowerRule::Zero,
            upper: UpperRule::Infinite,
        }
    }

    pub fn window(&self, m: usize) -> Window {
        self.window_at(m as f64)
    }

    /// The window at a real-valued sample size (useful for asymptotic checks).
    pub fn window_at(&self, mf: f64) -> Window {
        let lower = match self.lower {
            LowerRule::Zero => 0.0,
            LowerRule::Power { exponent, constant } => constant * mf.powf(exponent),
        };
        let upper = match self.upper {
            UpperRule::Infinite => f64::INFINITY,
            UpperRule::PolyLog { power, constant } => constant * mf.ln().max(0.0).powf(power),
        };
        Window {
            lower,
            upper: upper.max(lower),
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("smoothness must lie in (0, 2], got {sigma}")))
    }
}

/// The schedule for one sample: the lower rule depends on where the tail exponent `a`
/// falls relative to `-sigma/d - 1` and `-1`.
pub fn schedule_single(
    sigma: f64,
    a: f64,
    k: usize,
    d: usize,
    constants: ScheduleConstants,
) -> Result<TruncationSchedule> {
    check_sigma(sigma)?;
    if k == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!("need k >= 1 and d >= 1, got {k}, {d}")));
    }
    let df = d as f64;
    let lower = if a >= -1.0 {
        LowerRule::Zero
    } else if k == 1 {
        return Err(Error::ScheduleUndefined(format!(
            "tail exponent {a} < -1 needs k >= 2"
        )));
    } else {
        let denom = df * (k as f64 - 1.0);
        let exponent = if a < -sigma / df - 1.0 {
            -sigma.min(1.0) / denom
        } else {
            -1.0 / denom
        };
        LowerRule::Power {
            exponent,
            constant: constants.c_alpha,
        }
    };
    TruncationSchedule::new(
        lower,
        UpperRule::PolyLog {
            power: UPPER_POLYLOG_POWER,
            constant: constants.c_beta,
        },
    )
}

/// `[alpha_m, beta_m]` for a sample of size `m`.
pub fn truncation_points_single(
    m: usize,
    sigma: f64,
    a: f64,
    k: usize,
    d: usize,
    constants: ScheduleConstants,
) -> Result<Window> {
    if m <= k {
        return Err(Error::InsufficientPoints {
            needed: k + 1,
            available: m,
        });
    }
    Ok(schedule_single(sigma, a, k, d, constants)?.window(m))
}
