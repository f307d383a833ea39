//! Closed-form metric densities and distortion bounds.
//!
//! The singular densities live over a [`PostcriticalCloud`]:
//! `sigma(z) = dist(z, P)^{-alpha}` and `rho(z) = 1 + sigma(z)` with
//! `alpha = 1 - 1/d`. The disk formulas are stated for `B(0, r)`; callers
//! translate.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cloud::PostcriticalCloud;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricVariant {
    /// `dist^{-alpha}`
    Sigma,
    /// `1 + dist^{-alpha}`
    Rho,
}

#[derive(Clone, Debug)]
pub struct SingularMetric {
    cloud: Arc<PostcriticalCloud>,
    alpha: f64,
    variant: MetricVariant,
}

impl SingularMetric {
    pub fn new(degree: u32, cloud: Arc<PostcriticalCloud>, variant: MetricVariant) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidParameter(format!("degree must be at least 2, got {degree}")));
        }
        Ok(Self { cloud, alpha: 1.0 - 1.0 / degree as f64, variant })
    }

    pub fn rho(degree: u32, cloud: Arc<PostcriticalCloud>) -> Result<Self> {
        Self::new(degree, cloud, MetricVariant::Rho)
    }

    pub fn sigma(degree: u32, cloud: Arc<PostcriticalCloud>) -> Result<Self> {
        Self::new(degree, cloud, MetricVariant::Sigma)
    }

    /// `rho == 1` everywhere: the Euclidean metric as a degenerate case.
    pub fn uniform() -> Self {
        Self { cloud: Arc::new(PostcriticalCloud::empty()), alpha: 0.5, variant: MetricVariant::Rho }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn variant(&self) -> MetricVariant {
        self.variant
    }

    pub fn cloud(&self) -> &PostcriticalCloud {
        &self.cloud
    }

    fn density_at_distance(&self, dist: f64) -> f64 {
        let singular = if dist == 0.0 { f64::INFINITY } else { dist.powf(-self.alpha) };
        match self.variant {
            MetricVariant::Sigma => singular,
            MetricVariant::Rho => 1.0 + singular,
        }
    }

    /// Density at `z`; `+inf` on the cloud itself.
    pub fn density(&self, z: Complex64) -> f64 {
        self.density_at_distance(self.cloud.distance(z))
    }

    /// Density with the cloud distance clamped below by `floor`, which keeps
    /// it finite for quadrature.
    pub fn density_capped(&self, z: Complex64, floor: f64) -> f64 {
        self.density_at_distance(self.cloud.distance(z).max(floor))
    }
}

fn check_degree(d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!("degree must be at least 2, got {d}")));
    }
    Ok(())
}

/// `F_d(t) t^{1-1/d} = (1 + t^{2/d} + ... + t^{(2d-2)/d}) / d` for `0 <= t < 1`.
///
/// The finite geometric sum is continuous at `t = 0` and has no
/// cancellation as `t -> 1`.
pub fn series_f_times_power(d: u32, t: f64) -> Result<f64> {
    check_degree(d)?;
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, 1)")));
    }
    let q = t.powf(2.0 / d as f64);
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..d {
        sum += term;
        term *= q;
    }
    Ok(sum / d as f64)
}

/// Ratio `F_d(t)` of the orbifold density (cone point of order `d`) to the
/// hyperbolic density at pseudo-hyperbolic distance `t` from the cone point.
pub fn comparison_f(d: u32, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("t = {t} outside (0, 1)")));
    }
    let alpha = 1.0 - 1.0 / d as f64;
    Ok(series_f_times_power(d, t)? * t.powf(-alpha))
}

/// `(1 - t^2) / (d t^{1-1/d} (1 - t^{2/d}))`, kept as a cross-check for
/// [`comparison_f`]. Loses precision as `t -> 1`.
pub fn comparison_f_closed(d: u32, t: f64) -> Result<f64> {
    check_degree(d)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("t = {t} outside (0, 1)")));
    }
    let df = d as f64;
    Ok((1.0 - t * t) / (df * t.powf(1.0 - 1.0 / df) * (1.0 - t.powf(2.0 / df))))
}

/// `|(z - w) / (1 - conj(w) z)|` on the unit disk.
pub fn pseudo_hyperbolic_unit(z: Complex64, w: Complex64) -> Result<f64> {
    if !(z.norm() < 1.0 && w.norm() < 1.0) {
        return Err(Error::Domain(format!("{z} and {w} must lie in the unit disk")));
    }
    // Ratio of moduli; the two denominators are conjugate, so this is exactly symmetric.
    Ok((z - w).norm() / (1.0 - w.conj() * z).norm())
}

/// Pseudo-hyperbolic distance from the center of `B(z0, r)` to `z`.
pub fn pseudo_hyperbolic_disk_center(z0: Complex64, r: f64, z: Complex64) -> Result<f64> {
    let s = (z - z0).norm();
    if !(s < r) {
        return Err(Error::Domain(format!("{z} outside B({z0}, {r})")));
    }
    Ok(s / r)
}

/// `2 artanh p = log((1 + p) / (1 - p))`.
pub fn hyperbolic_from_pseudo(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("pseudo-hyperbolic distance {p} outside [0, 1)")));
    }
    Ok(2.0 * p.atanh())
}

/// `2r / (r^2 - |z|^2)` on `B(0, r)`.
pub fn hyperbolic_density_disk(r: f64, z: Complex64) -> Result<f64> {
    let s = z.norm();
    if !(s < r) {
        return Err(Error::Domain(format!("|z| = {s} not below r = {r}")));
    }
    Ok(2.0 * r / ((r - s) * (r + s)))
}

/// Hyperbolic orbifold density of the unit disk with one cone point of
/// order `d` at 0: `2 / (d |z|^{1-1/d} (1 - |z|^{2/d}))`. `+inf` at the cone
/// point.
pub fn orbifold_density_disk(d: u32, z: Complex64) -> Result<f64> {
    check_degree(d)?;
    let t = z.norm();
    if t == 0.0 {
        return Ok(f64::INFINITY);
    }
    if !(t < 1.0) {
        return Err(Error::Domain(format!("|z| = {t} not inside the unit disk")));
    }
    let df = d as f64;
    let one_minus = -((2.0 / df) * t.ln()).exp_m1();
    Ok(2.0 / (df * t.powf(1.0 - 1.0 / df) * one_minus))
}

/// Koebe distortion sandwich and quarter-disk radius for a univalent map on
/// `B(z0, r)` with `|g'(z0)| = deriv_mag`, at distance `s` from `z0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KoebeBounds {
    pub lower: f64,
    pub upper: f64,
    pub quarter_radius: f64,
}

impl KoebeBounds {
    pub fn contains(&self, ratio: f64) -> bool {
        self.lower <= ratio && ratio <= self.upper
    }
}

pub fn koebe_bounds(deriv_mag: f64, r: f64, s: f64) -> Result<KoebeBounds> {
    if !(deriv_mag > 0.0 && r > 0.0) {
        return Err(Error::Domain(format!("need |g'(z0)| > 0 and r > 0, got {deriv_mag}, {r}")));
    }
    if !(s >= 0.0 && s < r) {
        return Err(Error::Domain(format!("s = {s} outside [0, r = {r})")));
    }
    let q = s / r;
    Ok(KoebeBounds {
        lower: deriv_mag / ((1.0 + q) * (1.0 + q)),
        upper: deriv_mag / ((1.0 - q) * (1.0 - q)),
        quarter_radius: deriv_mag * r / 4.0,
    })
}

/// Hyperbolic density at the base point from the conformal radius: `2 / r`.
pub fn density_from_conformal_radius(r: f64) -> f64 {
    debug_assert!(r > 0.0);
    2.0 / r
}
