//! Singular expanding metrics for semihyperbolic unicritical polynomials
//! `f(z) = z^d + c`.
//!
//! The crate computes the metric densities `sigma = dist(., P)^{-(1-1/d)}`
//! and `rho = 1 + sigma` over a finite postcritical cloud, the orbifold
//! comparison function and Koebe bounds, backward-orbit expansion ratios and
//! pullback shrinking, external rays and John-constant estimates, and a grid
//! discretization of the `rho` path metric with Hölder-exponent fits.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod dynamics;
pub mod error;
pub mod expansion;
pub mod fit;
pub mod geometry;
pub mod metric;
pub mod path_metric;
pub mod rays;
pub mod render;
pub mod report;

pub use cloud::PostcriticalCloud;
pub use dynamics::{OrbitClassification, OrbitKind, UnicriticalMap};
pub use error::{Error, Result};
pub use metric::{KoebeBounds, MetricVariant, SingularMetric};

pub use num_complex::Complex64;
