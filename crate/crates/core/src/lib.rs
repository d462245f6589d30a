//! Inverse-Laplace k-nearest-neighbour estimators for entropies and divergences.
//!
//! A functional `T(p) = E_p[f(p(X))]` (or `T(p, q) = E_p[f(p(X), q(X))]`) is estimated by
//! averaging an estimator function `phi` over k-NN volumes. `phi` is chosen so that its
//! expectation under the limiting Gamma law of the volumes reproduces `f` exactly, which
//! removes the asymptotic bias that plug-in k-NN estimators carry.
//!
//! Module map:
//!
//! - [`knn`]: exact nearest-neighbour search and the volume transforms.
//! - [`catalog`]: the functionals, their estimator functions and tail envelopes.
//! - [`estimator`]: truncated averaging, jackknife errors and theoretical rates.
//! - [`distributions`]: truncated reference densities, samplers and ground truth.
//! - [`harness`]: MSE sweeps, rate fits, Gamma-law tests and result files.

pub mod catalog;
pub mod distributions;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod knn;
pub mod points;
pub mod quadrature;
pub mod special;

pub use catalog::{EstimatorFunction, FunctionalKind, FunctionalSpec};
pub use distributions::{Density, Family};
pub use error::{Error, Result};
pub use estimator::{estimate_single, estimate_two, Estimate, Window};
pub use knn::KnnIndex;
pub use points::PointSet;
