//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Every tolerance is pinned below.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semihyp::cloud::DEFAULT_DEDUP_TOLERANCE;
use semihyp::expansion::{backward_orbit, expansion_ratios, shrink_fit, BranchRule};
use semihyp::metric::{
    comparison_f, comparison_f_closed, hyperbolic_density_disk, koebe_bounds, orbifold_density_disk,
    series_f_times_power,
};
use semihyp::path_metric::PathMetricGrid;
use semihyp::report::{
    cmd_expansion, cmd_holder, cmd_rays, holder_setup, ExpansionSummary, ExperimentConfig, HolderSummary, RaysSummary,
    ENVELOPE_FACTOR,
};
use semihyp::{Complex64, PostcriticalCloud, SingularMetric, UnicriticalMap};

// Criterion 1.
const SANDWICH_DEGREES: std::ops::RangeInclusive<u32> = 2..=8;
const SANDWICH_GRID: usize = 10_000;
const CLOSED_FORM_T_MAX: f64 = 0.999;
const CLOSED_FORM_REL_TOL: f64 = 1e-9;
const SANDWICH_BUDGET: Duration = Duration::from_secs(1);
// Criterion 2.
const ORBIFOLD_DEGREES: [u32; 3] = [2, 3, 4];
const ORBIFOLD_SAMPLES: usize = 1_000;
const ORBIFOLD_REL_TOL: f64 = 1e-10;
const ORBIFOLD_BUDGET: Duration = Duration::from_secs(1);
// Criterion 3.
const KOEBE_SAMPLES: usize = 10_000;
const KOEBE_ROUNDING: f64 = 1e-12;
const KOEBE_BUDGET: Duration = Duration::from_secs(1);
// Criterion 4.
const EXPANSION_ORBITS: usize = 50;
const EXPANSION_DEPTH: usize = 30;
const SPOT_R1: f64 = 1.530734;
const SPOT_R1_TOL: f64 = 1e-6;
const EXPANSION_BUDGET: Duration = Duration::from_secs(10);
// Criterion 5.
const THETA_MAX: f64 = 0.95;
const STUB_THETA: f64 = 0.5;
const STUB_THETA_TOL: f64 = 0.05;
const STUB_DEPTH: usize = 20;
const STUB_EPSILON: f64 = 1e-3;
const SHRINK_BUDGET: Duration = Duration::from_secs(30);
// Criterion 6.
const MAX_CRITICAL_PER_ORBIT: usize = 1;
// Criterion 7.
const HOLDER_RESOLUTION: usize = 512;
const EXPONENT_RANGE: (f64, f64) = (0.45, 1.0);
const SPOT_RHO_SLACK: f64 = 1.09;
const SPOT_RHO_ORACLE: f64 = 0.171618;
const SPOT_RHO_ORACLE_TOL: f64 = 1e-6;
const HOLDER_BUDGET: Duration = Duration::from_secs(60);
// Criterion 8.
const RAY_ANGLES: [f64; 8] = [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875];
const UNIT_CIRCLE_DEPTH: usize = 30;
const UNIT_CIRCLE_JOHN: f64 = 1.0;
const UNIT_CIRCLE_JOHN_TOL: f64 = 0.05;
const JOHN_DEPTH: usize = 40;
const JOHN_REFINED_DEPTH: usize = 50;
const JOHN_FLOOR: f64 = 0.01;
const JOHN_STABILITY: f64 = 0.25;
const JOHN_BUDGET: Duration = Duration::from_secs(30);
// Criterion 9.
const LANDING_TOL: f64 = 1e-4;
const LANDING_BUDGET: Duration = Duration::from_secs(5);

const SEED: u64 = 0;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, budget: Duration) -> (bool, String) {
    (elapsed < budget, format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut violations = 0usize;
    let mut worst_rel = 0.0f64;
    for d in SANDWICH_DEGREES {
        let lower = 1.0 / d as f64;
        for k in 1..=SANDWICH_GRID {
            let t = k as f64 / (SANDWICH_GRID + 1) as f64;
            let v = series_f_times_power(d, t).unwrap();
            if !(lower <= v && v <= 1.0) {
                violations += 1;
            }
            if t <= CLOSED_FORM_T_MAX {
                let series = comparison_f(d, t).unwrap();
                let closed = comparison_f_closed(d, t).unwrap();
                worst_rel = worst_rel.max(rel_err(series, closed));
            }
        }
    }
    let (fast, time) = within(start.elapsed(), SANDWICH_BUDGET);
    outcome(
        violations == 0 && worst_rel <= CLOSED_FORM_REL_TOL && fast,
        format!("violations {violations}, closed-form rel err {worst_rel:.2e}, {time}"),
    )
}

/// Independent closed form of the comparison function.
fn f_oracle(d: u32, t: f64) -> f64 {
    let df = d as f64;
    (1.0 - t * t) / (df * t.powf(1.0 - 1.0 / df) * (1.0 - t.powf(2.0 / df)))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for d in ORBIFOLD_DEGREES {
        for _ in 0..ORBIFOLD_SAMPLES {
            let z = Complex64::from_polar(rng.gen_range(1e-3..0.999), rng.gen_range(0.0..std::f64::consts::TAU));
            let ratio = orbifold_density_disk(d, z).unwrap() / hyperbolic_density_disk(1.0, z).unwrap();
            worst = worst.max(rel_err(ratio, f_oracle(d, z.norm())));
        }
    }
    let (fast, time) = within(start.elapsed(), ORBIFOLD_BUDGET);
    outcome(worst <= ORBIFOLD_REL_TOL && fast, format!("worst rel err {worst:.2e}, {time}"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0usize;
    for _ in 0..KOEBE_SAMPLES {
        let r: f64 = rng.gen_range(0.1..10.0);
        let s = r * rng.gen_range(0.0..0.99);
        let z = Complex64::from_polar(s, rng.gen_range(0.0..std::f64::consts::TAU));
        // g(z) = r z / (r - z), g'(0) = 1, g'(z) = r^2 / (r - z)^2.
        let g = r * z / (r - z);
        let dg = (r * r / ((r - z) * (r - z))).norm();
        let b = koebe_bounds(1.0, r, s).unwrap();
        let q = s / r;
        let growth_ok = s == 0.0 || {
            let ratio = g.norm() / s;
            ratio >= b.lower * (1.0 - KOEBE_ROUNDING) && ratio <= b.upper * (1.0 + KOEBE_ROUNDING)
        };
        let distortion_ok = dg >= (1.0 - q) / (1.0 + q).powi(3) * (1.0 - KOEBE_ROUNDING)
            && dg <= (1.0 + q) / (1.0 - q).powi(3) * (1.0 + KOEBE_ROUNDING);
        // Any w in the quarter disk has its preimage r w / (r + w) inside B(0, r).
        let w = Complex64::from_polar(
            b.quarter_radius * rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let cover_ok = (r * w / (r + w)).norm() < r;
        if !(growth_ok && distortion_ok && cover_ok) {
            violations += 1;
        }
    }
    let (fast, time) = within(start.elapsed(), KOEBE_BUDGET);
    outcome(violations == 0 && fast, format!("violations {violations} of {KOEBE_SAMPLES}, {time}"))
}

fn config(c: Complex64, out: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        c_re: c.re,
        c_im: c.im,
        orbits: EXPANSION_ORBITS,
        depth: EXPANSION_DEPTH,
        grid_res: HOLDER_RESOLUTION,
        seed: SEED,
        out,
        ..ExperimentConfig::default()
    }
}

const PARAMETERS: [(&str, f64, f64); 2] = [("c=-2", -2.0, 0.0), ("c=i", 0.0, 1.0)];

struct Drivers {
    expansion: Vec<(&'static str, ExpansionSummary)>,
    expansion_time: Duration,
    holder: Vec<(&'static str, HolderSummary)>,
    holder_time: Duration,
    rays_unit: RaysSummary,
    rays: Vec<(&'static str, RaysSummary)>,
    rays_time: Duration,
    landing: RaysSummary,
    landing_time: Duration,
}

fn run_drivers(root: &Path) -> Drivers {
    let start = Instant::now();
    let expansion = PARAMETERS
        .iter()
        .map(|&(name, re, im)| {
            (name, cmd_expansion(&config(c64(re, im), root.join(format!("expansion-{name}")))).unwrap())
        })
        .collect();
    let expansion_time = start.elapsed();

    let start = Instant::now();
    let holder = PARAMETERS
        .iter()
        .map(|&(name, re, im)| (name, cmd_holder(&config(c64(re, im), root.join(format!("holder-{name}")))).unwrap()))
        .collect();
    let holder_time = start.elapsed();

    let start = Instant::now();
    let mut unit = config(c64(0.0, 0.0), root.join("rays-c=0"));
    unit.depth = UNIT_CIRCLE_DEPTH;
    let rays_unit = cmd_rays(&unit, &RAY_ANGLES).unwrap();
    let rays = PARAMETERS
        .iter()
        .map(|&(name, re, im)| {
            let mut cfg = config(c64(re, im), root.join(format!("rays-{name}")));
            cfg.depth = JOHN_DEPTH;
            (name, cmd_rays(&cfg, &RAY_ANGLES).unwrap())
        })
        .collect();
    let rays_time = start.elapsed();

    let start = Instant::now();
    let landing = cmd_rays(&config(c64(-2.0, 0.0), root.join("landing")), &[0.0, 0.5]).unwrap();
    let landing_time = start.elapsed();

    Drivers { expansion, expansion_time, holder, holder_time, rays_unit, rays, rays_time, landing, landing_time }
}

fn chebyshev_cloud(map: &UnicriticalMap) -> Arc<PostcriticalCloud> {
    let n = ExperimentConfig::default().orbit_n;
    Arc::new(PostcriticalCloud::build(map, n, DEFAULT_DEDUP_TOLERANCE).unwrap())
}

fn criterion_4(run: &Drivers) -> Outcome {
    let start = Instant::now();
    let map = UnicriticalMap::quadratic(c64(-2.0, 0.0));
    let cloud = chebyshev_cloud(&map);
    let orbit = backward_orbit(&map, cloud.clone(), c64(0.0, 0.0), 0.1, 1, &mut BranchRule::FixedIndex(0)).unwrap();
    let report = expansion_ratios(&orbit, &SingularMetric::sigma(2, cloud).unwrap()).unwrap();
    let r1 = report.ratios[1];
    // sigma(0) = 2^{-1/2}, sigma(sqrt 2) = (2 - sqrt 2)^{-1/2}, |f'(sqrt 2)| = 2 sqrt 2.
    let oracle = 2.0 * (2.0 - 2f64.sqrt()).sqrt();
    let spot_ok = (r1 - SPOT_R1).abs() <= SPOT_R1_TOL && (r1 - oracle).abs() <= SPOT_R1_TOL;
    let (fast, time) = within(run.expansion_time + start.elapsed(), EXPANSION_BUDGET);

    let mut pass = spot_ok && fast;
    let mut parts = vec![format!("R_1 {r1:.7}")];
    for (name, s) in &run.expansion {
        let complete = s.fits.len() == EXPANSION_ORBITS && s.failures.is_empty();
        let expanding = s.fits.iter().all(|f| f.lambda > 1.0);
        let short_orbits = s.fits.iter().filter(|f| f.shortfalls > 0).count();
        pass &= complete && expanding && s.total_shortfalls == 0;
        parts.push(format!(
            "{name}: {} fits, min lambda {:.3}, levels below {ENVELOPE_FACTOR} C lambda^n {} in {short_orbits} orbits",
            s.fits.len(),
            s.min_lambda,
            s.total_shortfalls
        ));
    }
    parts.push(time);
    outcome(pass, parts.join("; "))
}

fn criterion_5(run: &Drivers) -> Outcome {
    let start = Instant::now();
    let map = UnicriticalMap::quadratic(c64(0.0, 0.0));
    let cloud = Arc::new(PostcriticalCloud::from_points(vec![c64(0.0, 0.0)], DEFAULT_DEDUP_TOLERANCE));
    let orbit =
        backward_orbit(&map, cloud, c64(1.0, 0.0), STUB_EPSILON, STUB_DEPTH, &mut BranchRule::FixedIndex(0)).unwrap();
    let stub = shrink_fit(&orbit).unwrap().theta;
    let stub_ok = (stub - STUB_THETA).abs() <= STUB_THETA_TOL;
    let (fast, time) = within(run.expansion_time + start.elapsed(), SHRINK_BUDGET);
    let mut pass = stub_ok && fast;
    let mut parts = vec![format!("c=0 stub theta {stub:.4}")];
    for (name, s) in &run.expansion {
        pass &= s.fits.len() == EXPANSION_ORBITS && s.fits.iter().all(|f| f.theta < THETA_MAX);
        parts.push(format!("{name}: max theta {:.3}", s.max_theta));
    }
    parts.push(time);
    outcome(pass, parts.join("; "))
}

fn criterion_6(run: &Drivers) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s) in &run.expansion {
        pass &= s.failures.is_empty() && s.fits.iter().all(|f| f.critical_levels <= MAX_CRITICAL_PER_ORBIT);
        parts.push(format!("{name}: max critical levels {}", s.max_critical_levels));
    }
    outcome(pass, parts.join("; "))
}

/// Midpoint rule for the rho-length of [0, 0.1] with P = {-2, 2}.
fn rho_segment_quadrature() -> f64 {
    let n = 100_000;
    let h = 0.1 / n as f64;
    (0..n).map(|k| 1.0 + (2.0 - (k as f64 + 0.5) * h).powf(-0.5)).sum::<f64>() * h
}

fn criterion_7(run: &Drivers) -> Outcome {
    let start = Instant::now();
    let map = UnicriticalMap::quadratic(c64(-2.0, 0.0));
    let cloud = chebyshev_cloud(&map);
    let cfg = config(c64(-2.0, 0.0), PathBuf::new());
    let grid: PathMetricGrid = holder_setup(&cfg, SingularMetric::rho(2, cloud).unwrap(), &map).unwrap().grid;
    let d = grid.distance(c64(0.0, 0.0), c64(0.1, 0.0)).unwrap();
    let quad = rho_segment_quadrature();
    let spot_ok =
        (quad - SPOT_RHO_ORACLE).abs() <= SPOT_RHO_ORACLE_TOL && (0.1..=SPOT_RHO_SLACK * SPOT_RHO_ORACLE).contains(&d);
    let (fast, time) = within(run.holder_time + start.elapsed(), HOLDER_BUDGET);

    let mut pass = spot_ok && fast;
    let mut parts = vec![format!("d_rho(0, 0.1) {d:.5} vs oracle {quad:.6}")];
    for (name, s) in &run.holder {
        let e = s.fit.exponent;
        pass &= s.lower_bound.violations.is_empty()
            && (EXPONENT_RANGE.0..=EXPONENT_RANGE.1).contains(&e)
            && s.upper_bound.uniform;
        parts.push(format!(
            "{name}: exponent {e:.3}, lower-bound violations {}/{}, upper C small/large {:.3}/{:.3}",
            s.lower_bound.violations.len(),
            s.lower_bound.pairs,
            s.upper_bound.small_scale_constant,
            s.upper_bound.large_scale_constant
        ));
    }
    parts.push(time);
    outcome(pass, parts.join("; "))
}

fn criterion_8(run: &Drivers) -> Outcome {
    let (fast, time) = within(run.rays_time, JOHN_BUDGET);
    let unit: Vec<f64> = run.rays_unit.rays.iter().filter_map(|r| r.john.map(|j| j.constant)).collect();
    let mut pass = fast
        && unit.len() == RAY_ANGLES.len()
        && unit.iter().all(|c| (c - UNIT_CIRCLE_JOHN).abs() <= UNIT_CIRCLE_JOHN_TOL);
    let worst_unit = unit.iter().map(|c| (c - UNIT_CIRCLE_JOHN).abs()).fold(0.0, f64::max);
    let mut parts = vec![format!("c=0: {} rays, max |c - 1| {worst_unit:.2e}", unit.len())];
    for (name, s) in &run.rays {
        let mut worst_drift = 0.0f64;
        let mut ok = s.depth == JOHN_DEPTH && s.refined_depth == JOHN_REFINED_DEPTH && s.rays.len() == RAY_ANGLES.len();
        for r in &s.rays {
            match (r.john, r.john_refined) {
                (Some(a), Some(b)) => {
                    let drift = rel_err(b.constant, a.constant);
                    worst_drift = worst_drift.max(drift);
                    ok &= a.constant >= JOHN_FLOOR && b.constant >= JOHN_FLOOR && drift <= JOHN_STABILITY;
                }
                _ => ok = false,
            }
        }
        pass &= ok;
        parts.push(format!(
            "{name}: min {:.4} at depth {JOHN_DEPTH}, {:.4} at {JOHN_REFINED_DEPTH}, max drift {worst_drift:.2e}",
            s.john_constant.unwrap_or(f64::NAN),
            s.john_constant_refined.unwrap_or(f64::NAN)
        ));
    }
    parts.push(time);
    outcome(pass, parts.join("; "))
}

fn criterion_9(run: &Drivers) -> Outcome {
    let (fast, time) = within(run.landing_time, LANDING_BUDGET);
    let mut pass = fast;
    let mut parts = Vec::new();
    // The Chebyshev conjugacy sends angle 0 to 2 and angle 1/2 to -2.
    for (r, target) in run.landing.rays.iter().zip([c64(2.0, 0.0), c64(-2.0, 0.0)]) {
        let err = r.landing.map_or(f64::INFINITY, |z| (z - target).norm());
        pass &= err <= LANDING_TOL;
        parts.push(format!("theta {}: |landing - {}| {err:.2e}", r.theta, target.re));
    }
    parts.push(time);
    outcome(pass, parts.join("; "))
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(root, &path, out);
        } else {
            out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
        }
    }
}

fn criterion_10(first: &Path, second: &Path) -> Outcome {
    let _ = run_drivers(second);
    let (mut a, mut b) = (BTreeMap::new(), BTreeMap::new());
    collect_files(first, first, &mut a);
    collect_files(second, second, &mut b);
    let differing: Vec<String> = a
        .iter()
        .filter(|(k, v)| b.get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .chain(b.keys().filter(|k| !a.contains_key(*k)).map(|k| k.display().to_string()))
        .collect();
    outcome(
        !a.is_empty() && differing.is_empty(),
        format!("{} files compared, differing: [{}]", a.len(), differing.join(", ")),
    )
}

fn main() -> ExitCode {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();

    let mut results = vec![
        ("F_d sandwich", criterion_1()),
        ("orbifold ratio identity", criterion_2()),
        ("Koebe bounds", criterion_3()),
    ];
    let run = run_drivers(first.path());
    results.push(("expansion", criterion_4(&run)));
    results.push(("pullback shrinking", criterion_5(&run)));
    results.push(("single critical pass", criterion_6(&run)));
    results.push(("Hoelder equivalence", criterion_7(&run)));
    results.push(("John geometry", criterion_8(&run)));
    results.push(("ray landing", criterion_9(&run)));
    results.push(("determinism", criterion_10(first.path(), second.path())));

    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!("criterion {:>2} {:<24} {}  {}", k + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
