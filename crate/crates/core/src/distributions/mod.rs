//! Truncated reference densities: exact pdfs, seeded rejection samplers, their
//! smoothness-class constants, and ground-truth values of the catalogue functionals.
//!
//! Families and their command-line names:
//!
//! - `tgauss:<R>[,<c>]`: standard Gaussian restricted to `|z| <= R`, scaled by `c`.
//! - `texp:<R>`: `e^{-(x_1+...+x_d)}` on the simplex `x >= 0, sum x <= R`.
//! - `tlaplace:<R>`: `e^{-|x|_1}` on the L1 ball of radius `R`.
//! - `tcauchy:<R>`: `(1 + |x|^2)^{-(d+1)/2}` on the Euclidean ball of radius `R`.
//! - `uniform:<s>`: the box `[0, s]^d`.

mod truth;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::unit_ball_volume;
use crate::points::PointSet;
use crate::quadrature::{tanh_sinh, Tolerance};
use crate::special::{ln_gamma, regularized_lower_gamma};

pub use truth::{monte_carlo_functional, true_functional, true_functional_with, OracleMethod, Truth, MONTE_CARLO_DRAWS};

/// Samplers refuse to run when the parent distribution puts less mass than this on the
/// truncation region.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

/// Stream used for the first sample of a pair; the second uses stream 1.
pub const STREAM_X: u64 = 0;
pub const STREAM_Y: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    TruncatedGaussian { radius: f64, scale: f64 },
    TruncatedExponential { radius: f64 },
    TruncatedLaplace { radius: f64 },
    TruncatedCauchy { radius: f64 },
    UniformBox { side: f64 },
}

impl Family {
    fn validate(&self) -> Result<()> {
        let (name, x) = match *self {
            Family::TruncatedGaussian { radius, scale } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidParameter(format!("gaussian scale must be positive, got {scale}")));
                }
                ("radius", radius)
            }
            Family::TruncatedExponential { radius }
            | Family::TruncatedLaplace { radius }
            | Family::TruncatedCauchy { radius } => ("radius", radius),
            Family::UniformBox { side } => ("side", side),
        };
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
        }
    }

    /// Default reference families for dimension `d`.
    pub fn defaults(d: usize) -> Vec<Family> {
        vec![
            Family::TruncatedGaussian { radius: 3.0, scale: 1.0 },
            Family::TruncatedExponential { radius: 2.0 * d as f64 },
            Family::TruncatedLaplace { radius: 3.0 },
            Family::TruncatedCauchy { radius: 3.0 },
            Family::UniformBox { side: 1.0 },
        ]
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::TruncatedGaussian { radius, scale } if scale == 1.0 => write!(f, "tgauss:{radius}"),
            Family::TruncatedGaussian { radius, scale } => write!(f, "tgauss:{radius},{scale}"),
            Family::TruncatedExponential { radius } => write!(f, "texp:{radius}"),
            Family::TruncatedLaplace { radius } => write!(f, "tlaplace:{radius}"),
            Family::TruncatedCauchy { radius } => write!(f, "tcauchy:{radius}"),
            Family::UniformBox { side } => write!(f, "uniform:{side}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown density '{s}'"));
        let (name, args) = s.trim().split_once(':').ok_or_else(bad)?;
        let nums = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<f64>>>()?;
        let one = |nums: &[f64]| if nums.len() == 1 { Ok(nums[0]) } else { Err(bad()) };
        let family = match name {
            "tgauss" => match nums.as_slice() {
                [radius] => Family::TruncatedGaussian { radius: *radius, scale: 1.0 },
                [radius, scale] => Family::TruncatedGaussian {
                    radius: *radius,
                    scale: *scale,
                },
                _ => return Err(bad()),
            },
            "texp" => Family::TruncatedExponential { radius: one(&nums)? },
            "tlaplace" => Family::TruncatedLaplace { radius: one(&nums)? },
            "tcauchy" => Family::TruncatedCauchy { radius: one(&nums)? },
            "uniform" => Family::UniformBox { side: one(&nums)? },
            _ => return Err(bad()),
        };
        family.validate()?;
        Ok(family)
    }
}

impl TryFrom<String> for Family {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

impl Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Membership class constants: smoothness `sigma`, `sup p`, the Hoelder constant on the
/// interior of the support, the boundary's surface measure, and `C_0, C_1` in
/// `int p e^{-beta p} <= C_0 e^{-C_1 beta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothnessClass {
    pub sigma: f64,
    pub sup: f64,
    pub holder: f64,
    pub boundary_measure: f64,
    pub c0: f64,
    pub c1: f64,
}

/// A family in a fixed dimension with its normalization worked out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    family: Family,
    d: usize,
    /// `ln` of the constant in front of the unnormalized kernel.
    ln_norm: f64,
    /// Mass of the untruncated parent inside the truncation region.
    acceptance: f64,
}

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `L_d(R)`: the mass of the standard d-dimensional Cauchy inside the radius-R ball.
fn cauchy_mass(d: usize, radius: f64) -> Result<f64> {
    let tol = Tolerance::new(1e-15, 1e-13);
    let p = (d - 1) as i32;
    let num = tanh_sinh(|t: f64| t.sin().powi(p), 0.0, radius.atan(), tol)?;
    let den = tanh_sinh(|t: f64| t.sin().powi(p), 0.0, PI / 2.0, tol)?;
    Ok(num.value / den.value)
}

impl Density {
    pub fn new(family: Family, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        family.validate()?;
        let df = d as f64;
        let (ln_norm, acceptance) = match family {
            Family::TruncatedGaussian { radius, scale } => {
                let mass = regularized_lower_gamma(0.5 * df, 0.5 * radius * radius);
                (-0.5 * df * (2.0 * PI).ln() - mass.ln() - df * scale.ln(), mass)
            }
            Family::TruncatedExponential { radius } => {
                let mass = regularized_lower_gamma(df, radius);
                (-mass.ln(), mass)
            }
            Family::TruncatedLaplace { radius } => {
                let mass = regularized_lower_gamma(df, radius);
                (-mass.ln() - df * 2f64.ln(), mass)
            }
            Family::TruncatedCauchy { radius } => {
                let mass = cauchy_mass(d, radius)?;
                let h = 0.5 * (df + 1.0);
                (ln_gamma(h) - h * PI.ln() - mass.ln(), mass)
            }
            Family::UniformBox { side } => (-df * side.ln(), 1.0),
        };
        Ok(Density {
            family,
            d,
            ln_norm,
            acceptance,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Probability that a draw from the untruncated parent lands in the support.
    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }

    fn norm(&self) -> f64 {
        self.ln_norm.exp()
    }

    /// The density as a function of the Euclidean radius (Gaussian and Cauchy), or of
    /// the L1 norm (exponential and Laplace; for the exponential, only on the orthant).
    /// Zero beyond the support.
    pub(crate) fn profile(&self, r: f64) -> f64 {
        let df = self.d as f64;
        match self.family {
            Family::TruncatedGaussian { radius, scale } => {
                let z = r / scale;
                if z > radius {
                    0.0
                } else {
                    (self.ln_norm - 0.5 * z * z).exp()
                }
            }
            Family::TruncatedCauchy { radius } => {
                if r > radius {
                    0.0
                } else {
                    (self.ln_norm - 0.5 * (df + 1.0) * (r * r).ln_1p()).exp()
                }
            }
            Family::TruncatedExponential { radius } | Family::TruncatedLaplace { radius } => {
                if r > radius {
                    0.0
                } else {
                    (self.ln_norm - r).exp()
                }
            }
            Family::UniformBox { .. } => self.norm(),
        }
    }

    /// Radius (Euclidean or L1, matching [`Density::profile`]) of the support.
    pub(crate) fn profile_extent(&self) -> f64 {
        match self.family {
            Family::TruncatedGaussian { radius, scale } => radius * scale,
            Family::TruncatedCauchy { radius }
            | Family::TruncatedExponential { radius }
            | Family::TruncatedLaplace { radius } => radius,
            Family::UniformBox { side } => side,
        }
    }

    /// Exact density at `x`, including the truncation normalization. Panics when `x` has
    /// the wrong dimension.
    pub fn pdf(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d, "pdf: point has dimension {}, density {}", x.len(), self.d);
        match self.family {
            Family::TruncatedGaussian { .. } | Family::TruncatedCauchy { .. } => {
                self.profile(x.iter().map(|v| v * v).sum::<f64>().sqrt())
            }
            Family::TruncatedExponential { .. } => {
                if x.iter().any(|&v| v < 0.0) {
                    0.0
                } else {
                    self.profile(x.iter().sum())
                }
            }
            Family::TruncatedLaplace { .. } => self.profile(x.iter().map(|v| v.abs()).sum()),
            Family::UniformBox { side } => {
                if x.iter().all(|&v| (0.0..=side).contains(&v)) {
                    self.norm()
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether `x` lies in the interior of the support.
    pub fn contains_interior(&self, x: &[f64]) -> bool {
        if x.len() != self.d {
            return false;
        }
        match self.family {
            Family::TruncatedGaussian { radius, scale } => {
                x.iter().map(|v| v * v).sum::<f64>().sqrt() < radius * scale
            }
            Family::TruncatedCauchy { radius } => x.iter().map(|v| v * v).sum::<f64>().sqrt() < radius,
            Family::TruncatedExponential { radius } => {
                x.iter().all(|&v| v > 0.0) && x.iter().sum::<f64>() < radius
            }
            Family::TruncatedLaplace { radius } => x.iter().map(|v| v.abs()).sum::<f64>() < radius,
            Family::UniformBox { side } => x.iter().all(|&v| v > 0.0 && v < side),
        }
    }

    pub fn smoothness_class(&self) -> SmoothnessClass {
        let d = self.d;
        let df = d as f64;
        let sup = self.norm();
        match self.family {
            Family::TruncatedGaussian { radius, scale } => SmoothnessClass {
                sigma: 2.0,
                sup,
                holder: sup / (scale * scale) * (radius.powi(4) + df).sqrt(),
                boundary_measure: sphere_area(d, radius * scale),
                c0: 1.0,
                c1: sup * (-0.5 * radius * radius).exp(),
            },
            Family::TruncatedExponential { radius } => SmoothnessClass {
                sigma: 2.0,
                sup,
                holder: df * sup,
                boundary_measure: (df.sqrt() / ln_factorial(d - 1).exp() + df) * radius.powi(d as i32 - 1),
                c0: 1.0,
                c1: sup * (-radius).exp(),
            },
            Family::TruncatedLaplace { radius } => SmoothnessClass {
                sigma: 1.0,
                sup,
                holder: df.sqrt() * sup,
                boundary_measure: 2f64.powi(d as i32) * df.sqrt() / ln_factorial(d - 1).exp()
                    * radius.powi(d as i32 - 1),
                c0: 1.0,
                c1: sup * (-radius).exp(),
            },
            Family::TruncatedCauchy { radius } => SmoothnessClass {
                sigma: 2.0,
                sup,
                holder: (df + 1.0) * sup * (radius.powi(4) * (df + 1.0) * (df + 3.0) + df).sqrt(),
                boundary_measure: sphere_area(d, radius),
                c0: 1.0,
                c1: sup * (1.0 + radius * radius).powf(-0.5 * (df + 1.0)),
            },
            Family::UniformBox { side } => SmoothnessClass {
                sigma: 2.0,
                sup,
                holder: 0.0,
                boundary_measure: 2.0 * df * side.powi(d as i32 - 1),
                c0: 1.0,
                c1: sup,
            },
        }
    }

    /// `m` i.i.d. draws on stream 0 of the generator seeded with `seed`.
    pub fn sample(&self, m: usize, seed: u64) -> Result<PointSet> {
        self.sample_stream(m, seed, STREAM_X)
    }

    /// `m` i.i.d. draws from an explicit generator stream. Deterministic in
    /// `(seed, stream)`.
    pub fn sample_stream(&self, m: usize, seed: u64, stream: u64) -> Result<PointSet> {
        if m == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        self.sample_with(m, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<PointSet> {
        if self.acceptance < MIN_ACCEPTANCE {
            return Err(Error::Config(format!(
                "{} in dimension {}: rejection acceptance {:.3e} is below {MIN_ACCEPTANCE:e}",
                self.family, self.d, self.acceptance
            )));
        }
        let d = self.d;
        let mut coords = Vec::with_capacity(m * d);
        let mut z = vec![0.0; d];
        for _ in 0..m {
            self.draw(rng, &mut z);
            coords.extend_from_slice(&z);
        }
        PointSet::new(coords, d)
    }

    /// One draw by rejection from the untruncated parent.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64]) {
        match self.family {
            Family::TruncatedGaussian { radius, scale } => loop {
                let mut r2 = 0.0;
                for v in z.iter_mut() {
                    *v = rng.sample::<f64, _>(StandardNormal);
                    r2 += *v * *v;
                }
                if r2 <= radius * radius {
                    z.iter_mut().for_each(|v| *v *= scale);
                    return;
                }
            },
            Family::TruncatedExponential { radius } => loop {
                let mut s = 0.0;
                for v in z.iter_mut() {
                    *v = -(1.0 - rng.gen::<f64>()).ln();
                    s += *v;
                }
                if s <= radius {
                    return;
                }
            },
            Family::TruncatedLaplace { radius } => loop {
                let mut s = 0.0;
                for v in z.iter_mut() {
                    let u: f64 = rng.gen::<f64>() - 0.5;
                    *v = -u.signum() * (1.0 - 2.0 * u.abs()).ln();
                    s += v.abs();
                }
                if s <= radius {
                    return;
                }
            },
            Family::TruncatedCauchy { radius } => loop {
                // Z / |W| with independent standard normals is multivariate Cauchy.
                let w: f64 = rng.sample::<f64, _>(StandardNormal).abs();
                let mut r2 = 0.0;
                for v in z.iter_mut() {
                    *v = rng.sample::<f64, _>(StandardNormal) / w;
                    r2 += *v * *v;
                }
                if r2 <= radius * radius && r2.is_finite() {
                    return;
                }
            },
            Family::UniformBox { side } => {
                for v in z.iter_mut() {
                    *v = side * rng.gen::<f64>();
                }
            }
        }
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (d = {})", self.family, self.d)
    }
}

/// Surface area of the radius-`r` sphere in R^d, `d V_d r^{d-1}`.
fn sphere_area(d: usize, r: f64) -> f64 {
    let vd = unit_ball_volume(d).expect("dimension is at least 1");
    d as f64 * vd * r.powi(d as i32 - 1)
}
