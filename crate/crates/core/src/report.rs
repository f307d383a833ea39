//! Experiment drivers and their report files.
//!
//! Each driver writes a JSON summary plus CSV series into the configured
//! output directory. Files are written whole, through a temporary name, once
//! every worker has finished, and contain no timestamps or paths, so equal
//! configurations give byte-equal files.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{PostcriticalCloud, DEFAULT_DEDUP_TOLERANCE};
use crate::dynamics::{OrbitClassification, OrbitKind, UnicriticalMap, DEFAULT_RECURRENCE_DELTA};
use crate::error::{Error, Result};
use crate::expansion::{
    backward_orbit, default_epsilon, expansion_ratios, shrink_fit, BranchRule, CaseHistogram, CaseLabel,
    CLOUD_EXCLUSION,
};
use crate::metric::SingularMetric;
use crate::path_metric::{
    hoelder_fit_measured, lower_bound_audit, measure_pairs, sample_pairs, upper_bound_audit, Bbox, HoelderFit,
    LowerBoundAudit, PathMetricGrid, UpperBoundAudit,
};
use crate::rays::{
    john_constant_along_ray, rho_length_of_ray, rho_length_scaling, trace_ray, JohnEntry, RhoLengthScaling, DEFAULT_G0,
    MAX_DEPTH,
};
use crate::render::{layer_variant, render, RenderSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Lower-envelope factor applied to the fitted `C lambda^n`.
pub const ENVELOPE_FACTOR: f64 = 0.5;
/// Radii of the ray `rho`-length sweep.
pub const RHO_LENGTH_RADII: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
/// Extra depth used for the John-constant refinement check.
pub const JOHN_REFINEMENT: usize = 10;
const JULIA_CENTERS: usize = 40;
const SCALES_PER_CENTER: usize = 12;
const GRID_MARGIN: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d: u32,
    pub c_re: f64,
    pub c_im: f64,
    pub orbit_n: usize,
    /// Disk radius for backward orbits; `0.05 * diam(cloud)` when absent.
    pub epsilon: Option<f64>,
    pub grid_res: usize,
    pub orbits: usize,
    pub depth: usize,
    pub seed: u64,
    /// Never serialized into reports.
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 2,
            c_re: -2.0,
            c_im: 0.0,
            orbit_n: 100_000,
            epsilon: None,
            grid_res: 512,
            orbits: 50,
            depth: 30,
            seed: 0,
            out: PathBuf::from("semihyp-out"),
        }
    }
}

/// Partial configuration read from a JSON file; present keys win over flags.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverlay {
    pub d: Option<u32>,
    pub c_re: Option<f64>,
    pub c_im: Option<f64>,
    pub orbit_n: Option<usize>,
    pub epsilon: Option<f64>,
    pub grid_res: Option<usize>,
    pub orbits: Option<usize>,
    pub depth: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn c(&self) -> Complex64 {
        Complex64::new(self.c_re, self.c_im)
    }

    pub fn map(&self) -> Result<UnicriticalMap> {
        UnicriticalMap::new(self.d, self.c())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::InvalidParameter(format!("{field}: {why}")));
        if self.d < 2 {
            return bad("d", format!("degree must be at least 2, got {}", self.d));
        }
        if !(self.c_re.is_finite() && self.c_im.is_finite()) {
            return bad("c", "parameter must be finite".into());
        }
        if self.orbit_n == 0 {
            return bad("orbit_n", "must be positive".into());
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return bad("epsilon", format!("must be positive, got {e}"));
            }
        }
        if self.grid_res < 16 {
            return bad("grid_res", format!("must be at least 16, got {}", self.grid_res));
        }
        if self.orbits == 0 {
            return bad("orbits", "must be positive".into());
        }
        if self.depth == 0 {
            return bad("depth", "must be positive".into());
        }
        Ok(())
    }

    /// Apply a JSON overlay. Parse errors carry line and column; unknown
    /// keys are rejected by name.
    pub fn with_overlay_json(mut self, text: &str) -> Result<Self> {
        let o: ConfigOverlay = serde_json::from_str(text)?;
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { self.$f = v; })* };
        }
        take!(d, c_re, c_im, orbit_n, grid_res, orbits, depth, seed, out);
        if o.epsilon.is_some() {
            self.epsilon = o.epsilon;
        }
        self.validate()?;
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub seed: u64,
    pub cloud_size: usize,
    pub config: ExperimentConfig,
}

impl ReportHeader {
    fn new(config: &ExperimentConfig, cloud_size: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            seed: config.seed,
            cloud_size,
            config: config.clone(),
        }
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(dir, name, &bytes)
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<PathBuf> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(dir, name, &bytes)
}

/// Cloud of the critical orbit, or the reason it does not exist.
fn cloud_for(config: &ExperimentConfig, map: &UnicriticalMap) -> Result<Arc<PostcriticalCloud>> {
    Ok(Arc::new(PostcriticalCloud::build(map, config.orbit_n, DEFAULT_DEDUP_TOLERANCE)?))
}

fn classification(config: &ExperimentConfig, map: &UnicriticalMap) -> Result<OrbitClassification> {
    map.classify(config.orbit_n, map.escape_radius() * 2.0, DEFAULT_RECURRENCE_DELTA)
}

/// Stop unless the critical orbit is bounded and nonrecurrent.
fn require_nonrecurrent(class: &OrbitClassification) -> Result<()> {
    match class.kind {
        OrbitKind::BoundedNonrecurrent => Ok(()),
        OrbitKind::Escaping => Err(Error::Refused(
            "the critical orbit escapes; the Julia set is disconnected and carries no such metric".into(),
        )),
        OrbitKind::BoundedRecurrent => Err(Error::Refused(format!(
            "the critical orbit returns within {:.3e} of 0; the parameter is not semihyperbolic",
            class.recurrence_gap
        ))),
        OrbitKind::Undetermined => Err(Error::Refused(format!(
            "recurrence gap {:.3e} is too close to the threshold to decide",
            class.recurrence_gap
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudSummary {
    pub size: usize,
    pub diameter: f64,
    pub iterates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub header: ReportHeader,
    pub classification: OrbitClassification,
    pub cloud: Option<CloudSummary>,
}

pub fn cmd_classify(config: &ExperimentConfig) -> Result<ClassifyReport> {
    config.validate()?;
    let map = config.map()?;
    let classification = classification(config, &map)?;
    let cloud = match classification.kind {
        OrbitKind::Escaping => None,
        _ => {
            let c = cloud_for(config, &map)?;
            Some(CloudSummary { size: c.len(), diameter: c.diameter(), iterates: c.iterates() })
        }
    };
    let report = ClassifyReport {
        header: ReportHeader::new(config, cloud.as_ref().map_or(0, |c| c.size)),
        classification,
        cloud,
    };
    write_json(&config.out, "classify.json", &report)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRow {
    pub orbit: usize,
    pub level: usize,
    pub re: f64,
    pub im: f64,
    pub branch: usize,
    pub label: CaseLabel,
    pub diameter: f64,
    /// Empty where the level was excluded from the fit.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitFit {
    pub orbit: usize,
    pub z0_re: f64,
    pub z0_im: f64,
    pub lambda: f64,
    pub constant: f64,
    pub theta: f64,
    pub c0: f64,
    pub critical_levels: usize,
    pub skipped_levels: usize,
    /// Retained levels with `R_n < 0.5 C lambda^n`.
    pub shortfalls: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitFailure {
    pub orbit: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSummary {
    pub header: ReportHeader,
    pub epsilon: f64,
    /// Degree bound for the pullbacks; a single critical point makes it `d`.
    pub degree_bound: u32,
    /// Smallest `sigma` over the base points, a sample of the Julia set.
    pub min_sigma_sampled: f64,
    pub histogram: CaseHistogram,
    pub fits: Vec<OrbitFit>,
    pub failures: Vec<OrbitFailure>,
    pub min_lambda: f64,
    pub max_theta: f64,
    pub max_critical_levels: usize,
    pub total_shortfalls: usize,
}

/// Base points on the numerical Julia set, away from the cloud.
pub fn base_points(map: &UnicriticalMap, cloud: &PostcriticalCloud, count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        for z in map.julia_samples(count - out.len(), &mut rng) {
            if cloud.distance(z) >= 1e3 * CLOUD_EXCLUSION {
                out.push(z);
            }
        }
    }
    out
}

fn branch_rule(seed: u64, orbit: usize) -> BranchRule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(orbit as u64 + 1);
    BranchRule::Random(rng)
}

type OrbitOutcome = std::result::Result<(OrbitFit, Vec<OrbitRow>, CaseHistogram), String>;

pub fn cmd_expansion(config: &ExperimentConfig) -> Result<ExpansionSummary> {
    config.validate()?;
    let map = config.map()?;
    require_nonrecurrent(&classification(config, &map)?)?;
    let cloud = cloud_for(config, &map)?;
    let metric = SingularMetric::sigma(config.d, cloud.clone())?;
    let epsilon = config.epsilon.unwrap_or_else(|| default_epsilon(&cloud));
    let bases = base_points(&map, &cloud, config.orbits, config.seed);

    let outcomes: Vec<OrbitOutcome> = bases
        .par_iter()
        .enumerate()
        .map(|(k, &z0)| {
            let mut rule = branch_rule(config.seed, k);
            let orbit =
                backward_orbit(&map, cloud.clone(), z0, epsilon, config.depth, &mut rule).map_err(|e| e.to_string())?;
            let report = expansion_ratios(&orbit, &metric).map_err(|e| e.to_string())?;
            let shrink = shrink_fit(&orbit).map_err(|e| e.to_string())?;
            let mut rows: Vec<OrbitRow> = orbit
                .levels
                .iter()
                .enumerate()
                .map(|(n, l)| OrbitRow {
                    orbit: k,
                    level: n,
                    re: l.point.re,
                    im: l.point.im,
                    branch: l.branch,
                    label: l.label,
                    diameter: l.diameter,
                    ratio: None,
                })
                .collect();
            for (&n, &r) in report.levels.iter().zip(&report.ratios) {
                rows[n].ratio = Some(r);
            }
            let fit = OrbitFit {
                orbit: k,
                z0_re: z0.re,
                z0_im: z0.im,
                lambda: report.lambda,
                constant: report.constant,
                theta: shrink.theta,
                c0: shrink.c0,
                critical_levels: orbit.critical_levels().len(),
                skipped_levels: report.skipped.len(),
                shortfalls: report.shortfalls(ENVELOPE_FACTOR).len(),
            };
            Ok((fit, rows, report.histogram))
        })
        .collect();

    let (mut fits, mut rows, mut failures) = (Vec::new(), Vec::new(), Vec::new());
    let mut histogram = CaseHistogram::default();
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((fit, r, h)) => {
                fits.push(fit);
                rows.extend(r);
                histogram.merge(&h);
            }
            Err(reason) => failures.push(OrbitFailure { orbit: k, reason }),
        }
    }
    let summary = ExpansionSummary {
        header: ReportHeader::new(config, cloud.len()),
        epsilon,
        degree_bound: config.d,
        min_sigma_sampled: bases.iter().map(|&z| metric.density(z)).fold(f64::INFINITY, f64::min),
        histogram,
        min_lambda: fits.iter().map(|f| f.lambda).fold(f64::INFINITY, f64::min),
        max_theta: fits.iter().map(|f| f.theta).fold(f64::NEG_INFINITY, f64::max),
        max_critical_levels: fits.iter().map(|f| f.critical_levels).max().unwrap_or(0),
        total_shortfalls: fits.iter().map(|f| f.shortfalls).sum(),
        fits,
        failures,
    };
    write_csv(&config.out, "expansion_levels.csv", &rows)?;
    write_csv(&config.out, "expansion_fits.csv", &summary.fits)?;
    write_json(&config.out, "expansion.json", &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub z0_re: f64,
    pub z0_im: f64,
    pub z1_re: f64,
    pub z1_im: f64,
    pub euclidean: f64,
    pub grid: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderSummary {
    pub header: ReportHeader,
    pub bbox: Bbox,
    pub spacing: f64,
    pub fit: HoelderFit,
    pub lower_bound: LowerBoundAudit,
    pub upper_bound: UpperBoundAudit,
}

/// Square box around the Julia samples and the cloud with a fixed margin.
pub fn default_bbox(samples: &[Complex64], cloud: &PostcriticalCloud) -> Result<Bbox> {
    let extent = samples.iter().chain(cloud.points()).fold(0.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
    Bbox::square(Complex64::new(0.0, 0.0), extent + GRID_MARGIN)
}

/// Grid, pair set and measurements shared by the driver and the checks.
pub struct HolderRun {
    pub grid: PathMetricGrid,
    pub pairs: Vec<(Complex64, Complex64)>,
}

pub fn holder_setup(config: &ExperimentConfig, metric: SingularMetric, map: &UnicriticalMap) -> Result<HolderRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let samples = map.julia_samples(4 * JULIA_CENTERS, &mut rng);
    let bbox = default_bbox(&samples, metric.cloud())?;
    let cloud_points: Vec<Complex64> = metric.cloud().points().iter().copied().take(JULIA_CENTERS).collect();
    let grid = PathMetricGrid::build(metric, bbox, config.grid_res)?;
    let mut centers = cloud_points;
    centers.extend(samples.iter().take(JULIA_CENTERS));
    let h = grid.spacing();
    let pairs = sample_pairs(&grid, &centers, SCALES_PER_CENTER, h, 0.99, &mut rng);
    Ok(HolderRun { grid, pairs })
}

pub fn cmd_holder(config: &ExperimentConfig) -> Result<HolderSummary> {
    config.validate()?;
    let map = config.map()?;
    require_nonrecurrent(&classification(config, &map)?)?;
    let cloud = cloud_for(config, &map)?;
    let metric = SingularMetric::rho(config.d, cloud.clone())?;
    let run = holder_setup(config, metric, &map)?;
    let measured = measure_pairs(&run.grid, &run.pairs)?;
    let fit = hoelder_fit_measured(&measured)?;
    let summary = HolderSummary {
        header: ReportHeader::new(config, cloud.len()),
        bbox: run.grid.bbox(),
        spacing: run.grid.spacing(),
        fit,
        lower_bound: lower_bound_audit(&run.grid, &measured),
        upper_bound: upper_bound_audit(&measured, 1.0 - 1.0 / config.d as f64)?,
    };
    let rows: Vec<PairRow> = measured
        .iter()
        .map(|m| PairRow {
            z0_re: m.z0.re,
            z0_im: m.z0.im,
            z1_re: m.z1.re,
            z1_im: m.z1.im,
            euclidean: m.euclidean,
            grid: m.grid,
        })
        .collect();
    write_csv(&config.out, "holder_pairs.csv", &rows)?;
    write_json(&config.out, "holder.json", &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayPointRow {
    pub theta: f64,
    pub index: usize,
    pub potential: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoLengthRow {
    pub theta: f64,
    pub r: f64,
    pub rho_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayOutcome {
    pub theta: f64,
    pub landing: Option<Complex64>,
    pub john: Option<JohnEntry>,
    pub john_refined: Option<JohnEntry>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaysSummary {
    pub header: ReportHeader,
    pub depth: usize,
    pub refined_depth: usize,
    pub rays: Vec<RayOutcome>,
    pub john_constant: Option<f64>,
    pub john_constant_refined: Option<f64>,
    pub rho_length_scaling: Option<RhoLengthScaling>,
}

pub fn validate_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::InvalidParameter("no ray angles given".into()));
    }
    match angles.iter().find(|t| !(0.0..1.0).contains(*t)) {
        Some(t) => Err(Error::InvalidParameter(format!("ray angle {t} not in [0, 1) turns"))),
        None => Ok(()),
    }
}

pub fn cmd_rays(config: &ExperimentConfig, angles: &[f64]) -> Result<RaysSummary> {
    config.validate()?;
    validate_angles(angles)?;
    if config.depth > MAX_DEPTH {
        return Err(Error::InvalidParameter(format!("ray depth {} exceeds {MAX_DEPTH}", config.depth)));
    }
    let map = config.map()?;
    let class = classification(config, &map)?;
    if class.kind == OrbitKind::Escaping {
        return Err(Error::Refused("the critical orbit escapes; rays need a connected Julia set".into()));
    }
    let cloud = cloud_for(config, &map)?;
    let metric = SingularMetric::rho(config.d, cloud.clone())?;
    let refined_depth = (config.depth + JOHN_REFINEMENT).min(MAX_DEPTH);
    let oracle = |z| map.julia_distance_estimate(z);

    type Traced = (RayOutcome, Vec<RayPointRow>, Vec<RhoLengthRow>);
    let traced: Vec<Traced> = angles
        .par_iter()
        .map(|&theta| {
            let ray = match trace_ray(&map, theta, config.depth, DEFAULT_G0) {
                Ok(r) => r,
                Err(e) => {
                    let outcome =
                        RayOutcome { theta, landing: None, john: None, john_refined: None, error: Some(e.to_string()) };
                    return (outcome, Vec::new(), Vec::new());
                }
            };
            let points = ray
                .polyline
                .iter()
                .zip(&ray.potentials)
                .enumerate()
                .map(|(index, (z, &potential))| RayPointRow { theta, index, potential, re: z.re, im: z.im })
                .collect();
            let mut errors = Vec::new();
            let john = john_constant_along_ray(&ray, oracle).map_err(|e| errors.push(e.to_string())).ok();
            let john_refined = trace_ray(&map, theta, refined_depth, DEFAULT_G0)
                .and_then(|r| john_constant_along_ray(&r, oracle))
                .map_err(|e| errors.push(e.to_string()))
                .ok();
            let mut lengths = Vec::new();
            if let Some(landing) = ray.landing {
                for r in RHO_LENGTH_RADII {
                    match rho_length_of_ray(&ray, &metric, landing, r) {
                        Ok(l) => lengths.push(RhoLengthRow { theta, r, rho_length: l }),
                        Err(e) => errors.push(e.to_string()),
                    }
                }
            }
            let outcome = RayOutcome {
                theta,
                landing: ray.landing,
                john,
                john_refined,
                error: (!errors.is_empty()).then(|| errors.join("; ")),
            };
            (outcome, points, lengths)
        })
        .collect();

    let (mut rays, mut points, mut lengths) = (Vec::new(), Vec::new(), Vec::new());
    for (o, p, l) in traced {
        rays.push(o);
        points.extend(p);
        lengths.extend(l);
    }
    let min_of = |f: fn(&RayOutcome) -> Option<f64>| {
        let v: Vec<f64> = rays.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.into_iter().fold(f64::INFINITY, f64::min))
    };
    let samples: Vec<(f64, f64)> = lengths.iter().map(|l| (l.r, l.rho_length)).collect();
    let summary = RaysSummary {
        header: ReportHeader::new(config, cloud.len()),
        depth: config.depth,
        refined_depth,
        john_constant: min_of(|o| o.john.map(|j| j.constant)),
        john_constant_refined: min_of(|o| o.john_refined.map(|j| j.constant)),
        rho_length_scaling: rho_length_scaling(&samples, metric.alpha()).ok(),
        rays,
    };
    write_csv(&config.out, "rays.csv", &points)?;
    write_csv(&config.out, "rho_lengths.csv", &lengths)?;
    write_json(&config.out, "rays.json", &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderSummary {
    pub header: ReportHeader,
    pub spec: RenderSpec,
    pub file: String,
}

pub fn cmd_render(config: &ExperimentConfig, spec: &RenderSpec) -> Result<RenderSummary> {
    config.validate()?;
    spec.validate()?;
    let map = config.map()?;
    let cloud = match PostcriticalCloud::build(&map, config.orbit_n, DEFAULT_DEDUP_TOLERANCE) {
        Ok(c) => Arc::new(c),
        Err(Error::EscapingOrbit(_)) if spec.rays.is_empty() => Arc::new(PostcriticalCloud::empty()),
        Err(e) => return Err(e),
    };
    let metric = SingularMetric::new(config.d, cloud.clone(), layer_variant(spec.layer))?;
    let image = render(&map, &metric, spec)?;
    let file = "render.ppm".to_string();
    write_atomic(&config.out, &file, &image.to_ppm())?;
    let summary = RenderSummary { header: ReportHeader::new(config, cloud.len()), spec: spec.clone(), file };
    write_json(&config.out, "render.json", &summary)?;
    Ok(summary)
}
