//! External rays of connected Julia sets, John-constant estimates along
//! them and their `rho`-lengths near the landing point.
//!
//! A ray is traced by inverse iteration. Near infinity the Böttcher map is
//! inverted directly; lower potentials are reached by pulling back points
//! of the ray of angle `d * theta`, always keeping the preimage nearest the
//! previous point of the same ray.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::UnicriticalMap;
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::metric::SingularMetric;

pub const MAX_DEPTH: usize = 60;
pub const DEFAULT_SUBSTEPS: usize = 8;
pub const DEFAULT_G0: f64 = 1.0;
/// Two consecutive points closer than this mark the ray as landed.
pub const LANDING_TOLERANCE: f64 = 1e-6;
/// Potentials at or above this are inverted directly, lower ones pulled back.
const BOETTCHER_POTENTIAL: f64 = 9.21;
const MAX_DENOMINATOR: u128 = 1_000_000;

/// An angle in turns stored as an exact fraction, so that `d^k * theta mod 1`
/// carries no rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Angle {
    num: u128,
    den: u128,
}

impl Angle {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num >= den {
            return Err(Error::InvalidParameter(format!("angle {num}/{den} not in [0, 1)")));
        }
        let g = gcd(num as u128, den as u128);
        Ok(Self { num: num as u128 / g, den: den as u128 / g })
    }

    /// Nearest fraction with denominator up to a million when one lies
    /// within `1e-12`, the exact binary value otherwise.
    pub fn from_turns(theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("angle {theta} not in [0, 1)")));
        }
        let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
        let mut x = theta;
        loop {
            let a = x.floor();
            let (p2, q2) = (a as u128 * p1 + p0, a as u128 * q1 + q0);
            if q2 > MAX_DENOMINATOR {
                break;
            }
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
            if (p1 as f64 / q1 as f64 - theta).abs() <= 1e-12 {
                return Ok(Self { num: p1 % q1, den: q1 });
            }
            let frac = x - a;
            if frac < 1e-15 {
                break;
            }
            x = 1.0 / frac;
        }
        let den = 1u128 << 60;
        let num = (theta * den as f64) as u128;
        let g = gcd(num, den);
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn turns(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn multiply(&self, d: u32) -> Self {
        Self { num: self.num * d as u128 % self.den, den: self.den }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalRay {
    pub angle: f64,
    pub substeps: usize,
    /// From potential `G0` downwards.
    pub polyline: Vec<Complex64>,
    pub potentials: Vec<f64>,
    pub landing: Option<Complex64>,
}

impl ExternalRay {
    /// Euclidean length from the last point to each point, accumulated
    /// along the polyline.
    pub fn arclength_from_end(&self) -> Vec<f64> {
        let n = self.polyline.len();
        let mut out = vec![0.0; n];
        for k in (0..n.saturating_sub(1)).rev() {
            out[k] = out[k + 1] + (self.polyline[k] - self.polyline[k + 1]).norm();
        }
        out
    }
}

/// `phi(z) / z` for the Böttcher coordinate, by the convergent product.
fn boettcher_quotient(map: &UnicriticalMap, z: Complex64) -> Complex64 {
    let d = map.degree() as i32;
    let mut q = Complex64::new(1.0, 0.0);
    let mut w = z;
    let mut scale = 1.0 / d as f64;
    for _ in 0..64 {
        let wd = w.powi(d);
        let term = map.c() / wd;
        if !term.norm().is_finite() || term.norm() < 1e-18 {
            break;
        }
        q *= (Complex64::new(1.0, 0.0) + term).powf(scale);
        w = wd + map.c();
        scale /= d as f64;
    }
    q
}

/// Point with Böttcher coordinate `exp(g + 2 pi i theta)`, for large `g`.
fn invert_boettcher(map: &UnicriticalMap, g: f64, theta: f64) -> Complex64 {
    let target = Complex64::from_polar(g.exp(), TAU * theta);
    let mut z = target;
    for _ in 0..50 {
        let next = target / boettcher_quotient(map, z);
        let done = (next - z).norm() <= 1e-16 * next.norm();
        z = next;
        if done {
            break;
        }
    }
    z
}

fn ray_failure(angle: &Angle, reason: String) -> Error {
    Error::RayTracing { angle: angle.turns(), reason }
}

/// The preimage of `target` nearest `anchor`, refusing ties and steps that
/// are long compared with the spacing of the preimages.
fn nearest_preimage(map: &UnicriticalMap, target: Complex64, anchor: Complex64, angle: &Angle) -> Result<Complex64> {
    let pre = map.preimages(target);
    let mut ranked: Vec<(f64, Complex64)> = pre.into_iter().map(|w| ((w - anchor).norm(), w)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (d1, w1) = ranked[0];
    let (d2, w2) = ranked[1];
    if (w1 - w2).norm() > 1e-9 && d2 - d1 < 1e-12 {
        return Err(ray_failure(angle, format!("two preimages equidistant from {anchor}")));
    }
    if (w1 - w2).norm() > 1e-9 && d1 > 0.5 * d2 {
        return Err(ray_failure(angle, format!("step too coarse near {anchor}")));
    }
    Ok(w1)
}

/// Trace the ray of angle `theta` from potential `g0` down to `g0 / d^depth`,
/// with `substeps` points per factor `d` in potential.
pub fn trace_ray_exact(
    map: &UnicriticalMap,
    theta: Angle,
    depth: usize,
    g0: f64,
    substeps: usize,
) -> Result<ExternalRay> {
    if depth > MAX_DEPTH {
        return Err(Error::InvalidParameter(format!("ray depth {depth} exceeds {MAX_DEPTH}")));
    }
    if !(g0 > 0.0 && g0.is_finite()) {
        return Err(Error::InvalidParameter(format!("starting potential must be positive, got {g0}")));
    }
    if substeps == 0 {
        return Err(Error::InvalidParameter("substeps must be positive".into()));
    }
    if map.critical_orbit(1000).escaped_at.is_some() {
        return Err(Error::InvalidParameter("rays are traced only for bounded critical orbits".into()));
    }
    let d = map.degree() as f64;
    let mut lift = 0usize;
    while g0 * d.powi(lift as i32) < BOETTCHER_POTENTIAL * d {
        lift += 1;
    }
    let g_top = g0 * d.powi(lift as i32);
    let potential = |i: usize| g_top / d.powf(i as f64 / substeps as f64);
    let levels = lift + depth;

    let mut angles = vec![theta];
    for m in 1..=levels {
        angles.push(angles[m - 1].multiply(map.degree()));
    }
    // At step m, `above` holds points 0..=(levels - m - 1) * substeps of the ray of angle d^(m+1) theta.
    let mut above: Vec<Complex64> = vec![invert_boettcher(map, g_top, angles[levels].turns())];
    for m in (0..levels).rev() {
        let angle = angles[m];
        let count = (levels - m) * substeps + 1;
        let mut current = Vec::with_capacity(count);
        for i in 0..count {
            let z = if potential(i) >= BOETTCHER_POTENTIAL {
                invert_boettcher(map, potential(i), angle.turns())
            } else {
                nearest_preimage(map, above[i - substeps], current[i - 1], &angle)?
            };
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(ray_failure(&angle, format!("non-finite point at step {i}")));
            }
            current.push(z);
        }
        above = current;
    }
    let start = lift * substeps;
    let polyline: Vec<Complex64> = above[start..].to_vec();
    let potentials: Vec<f64> = (0..polyline.len()).map(|k| g0 / d.powf(k as f64 / substeps as f64)).collect();
    let n = polyline.len();
    let landing = (n >= 2 && (polyline[n - 1] - polyline[n - 2]).norm() < LANDING_TOLERANCE).then(|| polyline[n - 1]);
    Ok(ExternalRay { angle: theta.turns(), substeps, polyline, potentials, landing })
}

pub fn trace_ray(map: &UnicriticalMap, theta: f64, depth: usize, g0: f64) -> Result<ExternalRay> {
    trace_ray_exact(map, Angle::from_turns(theta)?, depth, g0, DEFAULT_SUBSTEPS)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JohnEntry {
    pub angle: f64,
    pub constant: f64,
    pub worst_point: Complex64,
    pub points_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JohnReport {
    pub constant: f64,
    pub worst_point: Complex64,
    pub ray_count: usize,
    pub entries: Vec<JohnEntry>,
}

impl JohnReport {
    pub fn from_entries(entries: Vec<JohnEntry>) -> Result<Self> {
        let worst = entries
            .iter()
            .min_by(|a, b| a.constant.total_cmp(&b.constant))
            .ok_or_else(|| Error::InsufficientData("no rays".into()))?;
        Ok(Self { constant: worst.constant, worst_point: worst.worst_point, ray_count: entries.len(), entries })
    }
}

/// Points closer to the landing point than this, along the ray, are ignored.
const MIN_ARCLENGTH: f64 = 1e-10;

/// `inf dist(z, J) / l(landing, z)` over the points of the ray. The distance
/// is the oracle's estimate, capped by the distance to the landing point,
/// which lies on the Julia set.
pub fn john_constant_along_ray<F>(ray: &ExternalRay, oracle: F) -> Result<JohnEntry>
where
    F: Fn(Complex64) -> Result<f64>,
{
    let landing = ray
        .landing
        .ok_or_else(|| Error::RayTracing { angle: ray.angle, reason: "ray has no landing estimate".into() })?;
    let arc = ray.arclength_from_end();
    let mut best = (f64::INFINITY, landing);
    let mut used = 0;
    for (&z, &l) in ray.polyline.iter().zip(&arc) {
        if l < MIN_ARCLENGTH {
            continue;
        }
        let Ok(est) = oracle(z) else { continue };
        let ratio = est.min((z - landing).norm()) / l;
        used += 1;
        if ratio < best.0 {
            best = (ratio, z);
        }
    }
    if used == 0 {
        return Err(Error::RayTracing { angle: ray.angle, reason: "no usable points on the ray".into() });
    }
    Ok(JohnEntry { angle: ray.angle, constant: best.0, worst_point: best.1, points_used: used })
}

/// `rho`-length of the part of the ray inside `B(base, 2r)`, by the
/// trapezoid rule. The polyline is cut where it first leaves the ball,
/// walking out from the landing end.
pub fn rho_length_of_ray(ray: &ExternalRay, metric: &SingularMetric, base: Complex64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    let outer = 2.0 * r;
    let pts = &ray.polyline;
    let n = pts.len();
    if n < 2 || (pts[n - 1] - base).norm() > outer {
        return Err(Error::Domain(format!("ray does not end inside B({base}, {outer})")));
    }
    let mut sub = vec![pts[n - 1]];
    for k in (0..n - 1).rev() {
        let (inner, next) = (pts[k + 1], pts[k]);
        if (next - base).norm() <= outer {
            sub.push(next);
            continue;
        }
        // Solve |inner + t (next - inner) - base| = outer for t in (0, 1].
        let (a, b) = (inner - base, next - inner);
        let (qa, qb, qc) = (b.norm_sqr(), 2.0 * (a * b.conj()).re, a.norm_sqr() - outer * outer);
        let t = (-qb + (qb * qb - 4.0 * qa * qc).max(0.0).sqrt()) / (2.0 * qa);
        sub.push(inner + b * t.clamp(0.0, 1.0));
        break;
    }
    if sub.len() < 2 {
        return Err(Error::Domain("empty sub-polyline".into()));
    }
    let mut total = 0.0;
    for w in sub.windows(2) {
        let len = (w[1] - w[0]).norm();
        let (fa, fb) = (metric.density(w[0]), metric.density(w[1]));
        total += match (fa.is_finite(), fb.is_finite()) {
            (true, true) => 0.5 * (fa + fb) * len,
            (true, false) => fa * len,
            (false, true) => fb * len,
            (false, false) => 0.0,
        };
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoLengthScaling {
    /// Fitted exponent of `l_rho` against `r`.
    pub exponent: f64,
    /// Smallest `C2` with `l_rho <= C2 r^{1-alpha}` on every sample.
    pub c2: f64,
    /// `C2` over the smaller half of the radii stays within twice the rest.
    pub uniform: bool,
}

pub fn rho_length_scaling(samples: &[(f64, f64)], alpha: f64) -> Result<RhoLengthScaling> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData("need at least two radii".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ratio = |s: &(f64, f64)| s.1 / s.0.powf(1.0 - alpha);
    let half = sorted.len() / 2;
    let small = sorted[..half].iter().map(ratio).fold(0.0, f64::max);
    let large = sorted[half..].iter().map(ratio).fold(0.0, f64::max);
    Ok(RhoLengthScaling { exponent: line.slope, c2: small.max(large), uniform: small <= 2.0 * large })
}
