//! Backward orbits of small disks, expansion ratios and pullback shrinking.
//!
//! A [`BackwardDiskOrbit`] starts from `U_0 = B(z0, eps)` and follows one
//! branch `z_n` of `f^{-n}(z0)`. The component `U_n` of `f^{-1}(U_{n-1})`
//! containing `z_n` is tracked through samples of its boundary, pulled back
//! one point at a time with the preimage nearest the previous sample.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PostcriticalCloud;
use crate::dynamics::UnicriticalMap;
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::geometry::{contains_even_odd, diameter, has_self_intersection, winding_number};
use crate::metric::{orbifold_density_disk, SingularMetric};

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 64;
pub const MAX_BOUNDARY_SAMPLES: usize = 4096;
/// Fraction of the cloud diameter used as the default disk radius.
pub const DEFAULT_EPSILON_FRACTION: f64 = 0.05;
/// Two candidate preimages closer than this in distance are indistinguishable.
pub const BRANCH_GAP: f64 = 1e-12;
/// A continuation step longer than this fraction of the distance to the
/// competing preimage is under-resolved.
pub const CONTINUATION_RATIO: f64 = 0.5;
/// Levels this close to the cloud are left out of ratio fits.
pub const CLOUD_EXCLUSION: f64 = 1e-9;
pub const MIN_SHRINK_LEVELS: usize = 10;
/// Allowed disagreement between the two sides of the orbifold bridge.
pub const BRIDGE_FACTOR: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    UnivalentNoP,
    UnivalentMeetsP,
    Critical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub point: Complex64,
    /// Index into `map.preimages(z_{n-1})`; zero at the base.
    pub branch: usize,
    pub boundary: Vec<Complex64>,
    pub diameter: f64,
    pub label: CaseLabel,
}

#[derive(Clone, Debug)]
pub struct BackwardDiskOrbit {
    pub map: UnicriticalMap,
    pub cloud: Arc<PostcriticalCloud>,
    pub z0: Complex64,
    pub epsilon: f64,
    /// Boundary samples on the base circle.
    pub samples: usize,
    pub levels: Vec<Level>,
    /// Radial path from `z_n` to the first boundary sample of the last level;
    /// it fixes where the next boundary walk starts.
    spoke: Vec<Complex64>,
}

#[allow(clippy::large_enum_variant)]
pub enum BranchRule {
    Random(ChaCha8Rng),
    FixedIndex(usize),
    /// Preimage nearest the critical value. All preimages have the same
    /// modulus, so this is what steers the next pullback onto `0`.
    TowardCritical,
}

impl BranchRule {
    pub fn random(seed: u64) -> Self {
        Self::Random(ChaCha8Rng::seed_from_u64(seed))
    }

    fn choose(&mut self, map: &UnicriticalMap, preimages: &[Complex64]) -> usize {
        match self {
            Self::Random(rng) => rng.gen_range(0..preimages.len()),
            Self::FixedIndex(k) => *k % preimages.len(),
            Self::TowardCritical => {
                let c = map.c();
                (0..preimages.len())
                    .min_by(|&a, &b| (preimages[a] - c).norm().total_cmp(&(preimages[b] - c).norm()))
                    .unwrap_or(0)
            }
        }
    }
}

/// `0.05 * diam(cloud)`, or `0.05` for a one-point cloud.
pub fn default_epsilon(cloud: &PostcriticalCloud) -> f64 {
    let d = cloud.diameter();
    DEFAULT_EPSILON_FRACTION * if d > 0.0 { d } else { 1.0 }
}

/// The preimage of `target` nearest `anchor`.
fn continue_branch(
    map: &UnicriticalMap,
    target: Complex64,
    anchor: Complex64,
    level: usize,
    sample: usize,
    samples: usize,
) -> Result<Complex64> {
    let pre = map.preimages(target);
    let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
    let mut second = f64::INFINITY;
    for w in pre {
        let dist = (w - anchor).norm();
        if dist < best.0 {
            second = best.0;
            best = (dist, w);
        } else if dist < second {
            second = dist;
        }
    }
    if second.is_finite() {
        if second - best.0 < BRANCH_GAP {
            return Err(Error::BranchAmbiguity { level, sample });
        }
        if best.0 > CONTINUATION_RATIO * second {
            return Err(Error::SamplingResolution { level, samples });
        }
    }
    Ok(best.1)
}

fn spoke_len(samples: usize) -> usize {
    (samples / 4).max(16)
}

struct Pulled {
    boundary: Vec<Complex64>,
    spoke: Vec<Complex64>,
}

/// Pull the previous level's boundary back to the component containing `z`.
///
/// The walk keeps going around the parent curve until it closes up; a level
/// that surrounds the critical point closes only after `d` turns.
fn pull_level(
    map: &UnicriticalMap,
    parent: &[Complex64],
    parent_spoke: &[Complex64],
    z: Complex64,
    level: usize,
    samples: usize,
) -> Result<Pulled> {
    let mut spoke = Vec::with_capacity(parent_spoke.len());
    spoke.push(z);
    for (j, &p) in parent_spoke.iter().enumerate().skip(1) {
        let prev = spoke[j - 1];
        spoke.push(continue_branch(map, p, prev, level, 0, samples)?);
    }
    let start = *spoke.last().expect("spoke has at least two points");
    let n = parent.len();
    let mut boundary = vec![start];
    let mut prev = start;
    let limit = n * map.degree() as usize;
    for idx in 1..=limit {
        let w = continue_branch(map, parent[idx % n], prev, level, idx, samples)?;
        if idx % n == 0 && (w - start).norm() <= 1e-12 * (1.0 + start.norm()) {
            if has_self_intersection(&boundary) {
                return Err(Error::SamplingResolution { level, samples });
            }
            return Ok(Pulled { boundary, spoke });
        }
        boundary.push(w);
        prev = w;
    }
    Err(Error::SamplingResolution { level, samples })
}

fn label_polygon(poly: &[Complex64], cloud: &PostcriticalCloud) -> CaseLabel {
    if winding_number(poly, Complex64::new(0.0, 0.0)) != 0 {
        return CaseLabel::Critical;
    }
    let (mut lo, mut hi) = (poly[0], poly[0]);
    for p in poly {
        lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    let meets = cloud
        .points()
        .iter()
        .any(|&q| q.re >= lo.re && q.re <= hi.re && q.im >= lo.im && q.im <= hi.im && contains_even_odd(poly, q));
    if meets {
        CaseLabel::UnivalentMeetsP
    } else {
        CaseLabel::UnivalentNoP
    }
}

impl BackwardDiskOrbit {
    /// Level 0 only: `M` equally spaced samples on the circle `|z - z0| = eps`.
    pub fn new(
        map: UnicriticalMap,
        cloud: Arc<PostcriticalCloud>,
        z0: Complex64,
        epsilon: f64,
        samples: usize,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("disk radius must be positive, got {epsilon}")));
        }
        if !(8..=MAX_BOUNDARY_SAMPLES).contains(&samples) {
            return Err(Error::InvalidParameter(format!(
                "boundary samples must lie in [8, {MAX_BOUNDARY_SAMPLES}], got {samples}"
            )));
        }
        if !(z0.re.is_finite() && z0.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("base point {z0} is not finite")));
        }
        // The first sample, and the spoke, sit at one radian: off the real
        // axis, where real parameters put preimages at equal distance, and
        // unchanged when the sample count doubles.
        let angle = |k: f64| 1.0 + std::f64::consts::TAU * k / samples as f64;
        let boundary: Vec<Complex64> =
            (0..samples).map(|k| z0 + Complex64::from_polar(epsilon, angle(k as f64))).collect();
        let m = spoke_len(samples);
        let spoke = (0..=m).map(|j| z0 + Complex64::from_polar(epsilon * j as f64 / m as f64, angle(0.0))).collect();
        let label = label_polygon(&boundary, &cloud);
        let level = Level { point: z0, branch: 0, diameter: diameter(&boundary), boundary, label };
        Ok(Self { map, cloud, z0, epsilon, samples, levels: vec![level], spoke })
    }

    /// Number of pullback steps taken.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.levels.iter().map(|l| l.point).collect()
    }

    pub fn branches(&self) -> Vec<usize> {
        self.levels.iter().skip(1).map(|l| l.branch).collect()
    }

    pub fn diameters(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.diameter).collect()
    }

    pub fn labels(&self) -> Vec<CaseLabel> {
        self.levels.iter().map(|l| l.label).collect()
    }

    pub fn critical_levels(&self) -> Vec<usize> {
        self.levels.iter().enumerate().filter(|(_, l)| l.label == CaseLabel::Critical).map(|(n, _)| n).collect()
    }

    /// `r_n` for every level, `None` where unsupported.
    pub fn radius_proxies(&self) -> Vec<Option<RadiusProxy>> {
        (0..self.levels.len()).map(|n| conformal_radius_proxy(self, n).ok()).collect()
    }

    fn extend(&mut self, point: Complex64, branch: usize) -> Result<()> {
        let level = self.levels.len();
        let parent = &self.levels[level - 1].boundary;
        let pulled = pull_level(&self.map, parent, &self.spoke, point, level, self.samples)?;
        let label = label_polygon(&pulled.boundary, &self.cloud);
        self.levels.push(Level {
            point,
            branch,
            diameter: diameter(&pulled.boundary),
            boundary: pulled.boundary,
            label,
        });
        self.spoke = pulled.spoke;
        Ok(())
    }

    /// Rebuild every level at a new sample count, keeping the branch choices.
    fn resample(&self, samples: usize) -> Result<Self> {
        let mut fresh = Self::new(self.map, self.cloud.clone(), self.z0, self.epsilon, samples)?;
        for l in &self.levels[1..] {
            fresh.extend(l.point, l.branch)?;
        }
        Ok(fresh)
    }
}

/// Extend `orbit` by `steps` levels. Under-resolved boundaries are rebuilt
/// with twice the samples, up to [`MAX_BOUNDARY_SAMPLES`].
pub fn pull_back(
    map: &UnicriticalMap,
    mut orbit: BackwardDiskOrbit,
    steps: usize,
    rule: &mut BranchRule,
) -> Result<BackwardDiskOrbit> {
    if *map != orbit.map {
        return Err(Error::InvalidParameter("orbit was built for a different map".into()));
    }
    for _ in 0..steps {
        let prev = orbit.levels.last().expect("orbit has a base level").point;
        let pre = map.preimages(prev);
        let branch = rule.choose(map, &pre);
        let point = pre[branch];
        loop {
            match orbit.extend(point, branch) {
                Ok(()) => break,
                Err(Error::SamplingResolution { level, samples }) => {
                    let next = orbit.samples * 2;
                    if next > MAX_BOUNDARY_SAMPLES {
                        return Err(Error::SamplingResolution { level, samples });
                    }
                    orbit = orbit.resample(next)?;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(orbit)
}

/// Build a depth-`steps` orbit from scratch.
pub fn backward_orbit(
    map: &UnicriticalMap,
    cloud: Arc<PostcriticalCloud>,
    z0: Complex64,
    epsilon: f64,
    steps: usize,
    rule: &mut BranchRule,
) -> Result<BackwardDiskOrbit> {
    let base = BackwardDiskOrbit::new(*map, cloud, z0, epsilon, DEFAULT_BOUNDARY_SAMPLES)?;
    pull_back(map, base, steps, rule)
}

/// Case label of level `n` recomputed from its boundary polygon.
pub fn classify_level(orbit: &BackwardDiskOrbit, n: usize) -> Result<CaseLabel> {
    let level = orbit
        .levels
        .get(n)
        .ok_or_else(|| Error::InvalidParameter(format!("level {n} beyond depth {}", orbit.depth())))?;
    if has_self_intersection(&level.boundary) {
        return Err(Error::SamplingResolution { level: n, samples: orbit.samples });
    }
    Ok(label_polygon(&level.boundary, &orbit.cloud))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseHistogram {
    pub univalent_no_p: usize,
    pub univalent_meets_p: usize,
    pub critical: usize,
}

impl CaseHistogram {
    pub fn add(&mut self, label: CaseLabel) {
        match label {
            CaseLabel::UnivalentNoP => self.univalent_no_p += 1,
            CaseLabel::UnivalentMeetsP => self.univalent_meets_p += 1,
            CaseLabel::Critical => self.critical += 1,
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.univalent_no_p += other.univalent_no_p;
        self.univalent_meets_p += other.univalent_meets_p;
        self.critical += other.critical;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    /// Levels used in the fit.
    pub levels: Vec<usize>,
    /// `R_n` for each entry of `levels`.
    pub ratios: Vec<f64>,
    /// Levels dropped for lying on the cloud.
    pub skipped: Vec<usize>,
    pub slope: f64,
    pub lambda: f64,
    pub constant: f64,
    pub histogram: CaseHistogram,
}

impl ExpansionReport {
    /// Retained levels where `R_n < factor * C * lambda^n`.
    pub fn shortfalls(&self, factor: f64) -> Vec<usize> {
        self.levels
            .iter()
            .zip(&self.ratios)
            .filter(|(&n, &r)| r < factor * self.constant * self.lambda.powi(n as i32))
            .map(|(&n, _)| n)
            .collect()
    }
}

/// `R_n = |(f^n)'(z_n)| density(z_0) / density(z_n)` and the least-squares
/// fit `log R_n = log C + n log lambda`.
pub fn expansion_ratios(orbit: &BackwardDiskOrbit, metric: &SingularMetric) -> Result<ExpansionReport> {
    let mut histogram = CaseHistogram::default();
    orbit.levels.iter().for_each(|l| histogram.add(l.label));
    if metric.cloud().distance(orbit.z0) < CLOUD_EXCLUSION {
        return Err(Error::Domain(format!("base point {} lies on the cloud", orbit.z0)));
    }
    let base_density = metric.density(orbit.z0);
    let (mut levels, mut ratios, mut skipped) = (Vec::new(), Vec::new(), Vec::new());
    for (n, l) in orbit.levels.iter().enumerate() {
        if metric.cloud().distance(l.point) < CLOUD_EXCLUSION {
            skipped.push(n);
            continue;
        }
        let deriv = orbit.map.orbit_derivative_magnitude(l.point, n);
        levels.push(n);
        ratios.push(deriv * base_density / metric.density(l.point));
    }
    if levels.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} usable levels out of {}",
            levels.len(),
            orbit.levels.len()
        )));
    }
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    Ok(ExpansionReport {
        levels,
        ratios,
        skipped,
        slope: line.slope,
        lambda: line.slope.exp(),
        constant: line.intercept.exp(),
        histogram,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadiusProxyKind {
    /// `eps / |(f^n)'(z_n)|`
    Transport,
    /// Half the sampled diameter; used past a critical level.
    DiameterFallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusProxy {
    pub value: f64,
    pub kind: RadiusProxyKind,
}

/// Stand-in for the conformal radius `r(U_n, z_n)`.
pub fn conformal_radius_proxy(orbit: &BackwardDiskOrbit, n: usize) -> Result<RadiusProxy> {
    let level = orbit
        .levels
        .get(n)
        .ok_or_else(|| Error::InvalidParameter(format!("level {n} beyond depth {}", orbit.depth())))?;
    if n == 0 {
        return Ok(RadiusProxy { value: orbit.epsilon, kind: RadiusProxyKind::Transport });
    }
    if level.label == CaseLabel::Critical {
        return Err(Error::Unsupported(format!("level {n} contains the critical point")));
    }
    // A critical point in U_0 is never composed with f, so only levels 1.. count.
    if orbit.levels[1..n].iter().any(|l| l.label == CaseLabel::Critical) {
        return Ok(RadiusProxy { value: 0.5 * level.diameter, kind: RadiusProxyKind::DiameterFallback });
    }
    let deriv = orbit.map.orbit_derivative_magnitude(level.point, n);
    Ok(RadiusProxy { value: orbit.epsilon / deriv, kind: RadiusProxyKind::Transport })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkFit {
    pub c0: f64,
    pub theta: f64,
    pub r_squared: f64,
}

impl ShrinkFit {
    /// A fitted `theta >= 1` means the pullbacks did not contract.
    pub fn is_contracting(&self) -> bool {
        self.theta < 1.0
    }
}

/// Least-squares fit `log diam U_n = log C0 + n log theta`.
pub fn shrink_fit(orbit: &BackwardDiskOrbit) -> Result<ShrinkFit> {
    shrink_fit_diameters(&orbit.diameters())
}

pub fn shrink_fit_diameters(diameters: &[f64]) -> Result<ShrinkFit> {
    if diameters.len() < MIN_SHRINK_LEVELS {
        return Err(Error::InsufficientData(format!("{} levels, need at least {MIN_SHRINK_LEVELS}", diameters.len())));
    }
    if let Some(d) = diameters.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::Domain(format!("diameter {d} cannot be fitted on a log scale")));
    }
    let xs: Vec<f64> = (0..diameters.len()).map(|n| n as f64).collect();
    let ys: Vec<f64> = diameters.iter().map(|d| d.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    Ok(ShrinkFit { c0: line.intercept.exp(), theta: line.slope.exp(), r_squared: line.r_squared })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case3Report {
    pub critical_level: usize,
    pub final_level: usize,
    /// `f^{n0}(0)`, the critical value seen from the base disk.
    pub w0: Complex64,
    pub derivative: f64,
    pub diameter: f64,
    /// Distance from `z_n` to the sampled boundary; never exceeds `r_n`.
    pub inradius: f64,
    /// `log(|(f^n)'| diam / (eps^{1/d} |z0 - w0|^{1-1/d}))`
    pub derivative_margin: f64,
    /// `log((4 / inradius)^{1-1/d} / sigma(z_n))`
    pub sigma_final_margin: f64,
    /// `log(sigma(z_0) |z0 - w0|^{1-1/d})`
    pub sigma_base_margin: f64,
    /// `(2 / r_n) / (delta_O(z0) |(f^n)'(z_n)|)` with `r_n = diam / 2`.
    pub bridge_ratio: f64,
}

impl Case3Report {
    pub fn holds(&self) -> bool {
        self.derivative_margin >= 0.0 && self.sigma_final_margin >= 0.0 && self.sigma_base_margin >= 0.0
    }

    pub fn bridge_holds(&self) -> bool {
        self.bridge_ratio <= BRIDGE_FACTOR && self.bridge_ratio >= 1.0 / BRIDGE_FACTOR
    }
}

fn distance_to_polyline(z: Complex64, poly: &[Complex64]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let ab = b - a;
            let len2 = ab.norm_sqr();
            let t = if len2 > 0.0 { ((z - a) * ab.conj()).re / len2 } else { 0.0 };
            (z - (a + ab * t.clamp(0.0, 1.0))).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Inequalities for an orbit whose pullback met the critical point, checked
/// at the final level with proxies on the side that can only help them.
pub fn case3_bound_check(orbit: &BackwardDiskOrbit, metric: &SingularMetric) -> Result<Case3Report> {
    let n0 = *orbit
        .critical_levels()
        .iter()
        .find(|&&k| k >= 1)
        .ok_or_else(|| Error::Unsupported("no pullback beyond the base contains the critical point".into()))?;
    let map = &orbit.map;
    let d = map.degree();
    let alpha = map.alpha();
    let n = orbit.depth();
    let level = &orbit.levels[n];
    let w0 = map.iterate(Complex64::new(0.0, 0.0), n0);
    let gap = (orbit.z0 - w0).norm();
    let derivative = map.orbit_derivative_magnitude(level.point, n);
    let inradius = distance_to_polyline(level.point, &level.boundary);
    let sigma = |z: Complex64| metric.cloud().distance(z).powf(-alpha);

    let derivative_margin = (derivative * level.diameter).ln() - (orbit.epsilon.ln() / d as f64 + alpha * gap.ln());
    let sigma_final_margin = alpha * (4.0 / inradius).ln() - sigma(level.point).ln();
    let sigma_base_margin = sigma(orbit.z0).ln() + alpha * gap.ln();

    let t = gap / orbit.epsilon;
    let delta = orbifold_density_disk(d, Complex64::new(t, 0.0))? * (1.0 - t * t) / orbit.epsilon;
    let bridge_ratio = (4.0 / level.diameter) / (delta * derivative);

    Ok(Case3Report {
        critical_level: n0,
        final_level: n,
        w0,
        derivative,
        diameter: level.diameter,
        inradius,
        derivative_margin,
        sigma_final_margin,
        sigma_base_margin,
        bridge_ratio,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSweepEntry {
    pub epsilon: f64,
    pub theta: f64,
    pub critical_levels: usize,
}

/// Shrink rate of one branch for several disk radii.
pub fn epsilon_sweep(
    map: &UnicriticalMap,
    cloud: Arc<PostcriticalCloud>,
    z0: Complex64,
    epsilons: &[f64],
    depth: usize,
    seed: u64,
) -> Result<Vec<EpsilonSweepEntry>> {
    epsilons
        .iter()
        .map(|&epsilon| {
            let orbit = backward_orbit(map, cloud.clone(), z0, epsilon, depth, &mut BranchRule::random(seed))?;
            Ok(EpsilonSweepEntry {
                epsilon,
                theta: shrink_fit(&orbit)?.theta,
                critical_levels: orbit.critical_levels().len(),
            })
        })
        .collect()
}
