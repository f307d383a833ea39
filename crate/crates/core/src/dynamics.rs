//! Iteration of the unicritical family `f(z) = z^d + c`.
//!
//! Everything here is a pure function of the map and its arguments. The
//! only critical point in the plane is `0`, of multiplicity `d - 1`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of critical-orbit iterates used for classification.
pub const DEFAULT_ORBIT_ITERATES: usize = 100_000;
/// Default recurrence threshold for the critical orbit.
pub const DEFAULT_RECURRENCE_DELTA: f64 = 1e-3;
/// Iteration budget for escape-rate computations.
pub const ESCAPE_ITERATION_BUDGET: usize = 10_000;

/// `f(z) = z^d + c` with `d >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnicriticalMap {
    degree: u32,
    c: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitKind {
    Escaping,
    BoundedNonrecurrent,
    BoundedRecurrent,
    Undetermined,
}

/// Heuristic verdict on the critical orbit. Never a certificate: the
/// observed gap over finitely many iterates is all it knows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitClassification {
    pub kind: OrbitKind,
    /// `min |f^n(0)|` over the iterates that were computed.
    pub recurrence_gap: f64,
    pub escape_index: Option<usize>,
    pub iterates_used: usize,
}

/// Forward critical orbit `[f(0), f^2(0), ...]`, possibly cut short by escape.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalOrbit {
    pub points: Vec<Complex64>,
    /// Generation index `n` of the first iterate with `|f^n(0)| > R_esc`.
    pub escaped_at: Option<usize>,
}

impl UnicriticalMap {
    pub fn new(degree: u32, c: Complex64) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidParameter(format!("degree must be at least 2, got {degree}")));
        }
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("parameter c={c} is not finite")));
        }
        Ok(Self { degree, c })
    }

    pub fn quadratic(c: Complex64) -> Self {
        Self { degree: 2, c }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    /// Exponent `1 - 1/d` of the singular metrics attached to this map.
    pub fn alpha(&self) -> f64 {
        1.0 - 1.0 / self.degree as f64
    }

    /// `max(2, |c|) + 1`: every orbit that leaves this disk escapes.
    pub fn escape_radius(&self) -> f64 {
        self.c.norm().max(2.0) + 1.0
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        z.powu(self.degree) + self.c
    }

    #[inline]
    pub fn deriv(&self, z: Complex64) -> Complex64 {
        z.powu(self.degree - 1) * self.degree as f64
    }

    /// `f^n(z)`.
    pub fn iterate(&self, z: Complex64, n: usize) -> Complex64 {
        (0..n).fold(z, |w, _| self.eval(w))
    }

    /// `log |(f^n)'(z)|`, accumulated term by term. `-inf` when the orbit
    /// hits the critical point.
    pub fn orbit_log_derivative(&self, z: Complex64, n: usize) -> f64 {
        let ln_d = (self.degree as f64).ln();
        let mut w = z;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += ln_d + (self.degree - 1) as f64 * w.norm().ln();
            w = self.eval(w);
        }
        acc
    }

    /// `|(f^n)'(z)| = |prod_{j<n} f'(f^j(z))|`.
    pub fn orbit_derivative_magnitude(&self, z: Complex64, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        self.orbit_log_derivative(z, n).exp()
    }

    /// The `d` solutions of `w^d = z - c`: principal root first, then
    /// successive rotations by `exp(2 pi i / d)`.
    pub fn preimages(&self, z: Complex64) -> Vec<Complex64> {
        let d = self.degree as f64;
        let u = z - self.c;
        if u == Complex64::new(0.0, 0.0) {
            return vec![u; self.degree as usize];
        }
        let (r, phi) = u.to_polar();
        let root = Complex64::from_polar(r.powf(1.0 / d), phi / d);
        (0..self.degree).map(|k| root * Complex64::from_polar(1.0, TAU * k as f64 / d)).collect()
    }

    pub fn critical_orbit(&self, n: usize) -> CriticalOrbit {
        self.critical_orbit_with_radius(n, self.escape_radius())
    }

    pub fn critical_orbit_with_radius(&self, n: usize, escape_radius: f64) -> CriticalOrbit {
        let mut points = Vec::with_capacity(n.min(1 << 20));
        let mut z = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            z = self.eval(z);
            points.push(z);
            if !(z.norm() <= escape_radius) {
                return CriticalOrbit { points, escaped_at: Some(k) };
            }
        }
        CriticalOrbit { points, escaped_at: None }
    }

    /// Classify the critical orbit from `n` iterates.
    ///
    /// Gaps above `2 delta` are non-recurrent, below `delta / 2` recurrent,
    /// and anything in between is reported as undetermined.
    pub fn classify(&self, n: usize, escape_radius: f64, recurrence_delta: f64) -> Result<OrbitClassification> {
        if n < 1 {
            return Err(Error::InvalidParameter("need at least one iterate".into()));
        }
        if !(recurrence_delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "recurrence threshold must be positive, got {recurrence_delta}"
            )));
        }
        if !(escape_radius > self.c.norm().max(2.0)) {
            return Err(Error::InvalidParameter(format!("escape radius {escape_radius} must exceed max(2, |c|)")));
        }
        let orbit = self.critical_orbit_with_radius(n, escape_radius);
        let gap = orbit.points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let kind = if orbit.escaped_at.is_some() {
            OrbitKind::Escaping
        } else if gap > 2.0 * recurrence_delta {
            OrbitKind::BoundedNonrecurrent
        } else if gap < 0.5 * recurrence_delta {
            OrbitKind::BoundedRecurrent
        } else {
            OrbitKind::Undetermined
        };
        Ok(OrbitClassification {
            kind,
            recurrence_gap: gap,
            escape_index: orbit.escaped_at,
            iterates_used: orbit.points.len(),
        })
    }

    /// Classification with the default iterate count, escape radius and
    /// recurrence threshold.
    pub fn classify_default(&self) -> OrbitClassification {
        self.classify(DEFAULT_ORBIT_ITERATES, self.escape_radius(), DEFAULT_RECURRENCE_DELTA)
            .expect("default classification parameters are valid")
    }

    /// Radius past which `log|z_n| / d^n` is accurate to rounding.
    fn refinement_radius(&self) -> f64 {
        (600.0 / self.degree as f64).min(23.0).exp()
    }

    /// Green potential `G(z) = lim log|f^n(z)| / d^n`.
    ///
    /// Escape is decided against `escape_radius` within `n_max` iterates
    /// (`0` otherwise); once escaped, iteration continues to a large radius
    /// so the truncation error is below rounding.
    pub fn green_potential(&self, z: Complex64, n_max: usize, escape_radius: f64) -> f64 {
        let ln_d = (self.degree as f64).ln();
        let mut w = z;
        let mut n = 0usize;
        while !(w.norm() > escape_radius) {
            if n >= n_max {
                return 0.0;
            }
            w = self.eval(w);
            n += 1;
        }
        let r_ref = self.refinement_radius();
        while w.norm() < r_ref {
            w = self.eval(w);
            n += 1;
        }
        (w.norm().ln().ln() - n as f64 * ln_d).exp()
    }

    /// Potential-theoretic estimate of `dist(z, J)`, correct up to a bounded
    /// factor.
    ///
    /// With `G` the Green potential, the Koebe-type bounds
    /// `sinh G / (2 e^G |grad G|) <= dist <= 2 sinh G / |grad G|` hold; the
    /// returned value is their geometric mean `sinh G / (e^{G/2} |grad G|)`.
    pub fn julia_distance_estimate(&self, z: Complex64) -> Result<f64> {
        let ln_d = (self.degree as f64).ln();
        let escape_radius = self.escape_radius();
        let r_ref = self.refinement_radius();
        let mut w = z;
        let mut log_deriv = 0.0;
        let mut n = 0usize;
        let mut escaped = false;
        while n < ESCAPE_ITERATION_BUDGET + 64 {
            if !escaped && w.norm() > escape_radius {
                escaped = true;
            }
            if escaped && w.norm() >= r_ref {
                break;
            }
            if !escaped && n >= ESCAPE_ITERATION_BUDGET {
                return Err(Error::NotEscaping(z));
            }
            log_deriv += ln_d + (self.degree - 1) as f64 * w.norm().ln();
            w = self.eval(w);
            n += 1;
        }
        if !escaped {
            return Err(Error::NotEscaping(z));
        }
        let ln_abs = w.norm().ln();
        let g = (ln_abs.ln() - n as f64 * ln_d).exp();
        let ln_grad = log_deriv - n as f64 * ln_d - ln_abs;
        Ok(g.sinh() * (-0.5 * g - ln_grad).exp())
    }

    /// Points on the numerical Julia set by random backward iteration from
    /// outside the escape disk.
    pub fn julia_samples<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<Complex64> {
        const BURN_IN: usize = 80;
        let start_radius = 2.0 * self.escape_radius();
        (0..count)
            .map(|_| {
                let mut z = Complex64::from_polar(start_radius, rng.gen::<f64>() * TAU);
                for _ in 0..BURN_IN {
                    let pre = self.preimages(z);
                    z = pre[rng.gen_range(0..pre.len())];
                }
                z
            })
            .collect()
    }
}
