//! Property tests for the invariants of the public types and operations.

use std::sync::Arc;

use proptest::prelude::*;
use semihyp::expansion::{backward_orbit, expansion_ratios, shrink_fit, BranchRule, CaseLabel};
use semihyp::geometry::diameter;
use semihyp::metric::{koebe_bounds, pseudo_hyperbolic_unit, series_f_times_power};
use semihyp::path_metric::{Bbox, PathMetricGrid};
use semihyp::rays::{john_constant_along_ray, trace_ray_exact, Angle};
use semihyp::report::base_points;
use semihyp::{Complex64, MetricVariant, OrbitKind, PostcriticalCloud, SingularMetric, UnicriticalMap};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn parameter(k: usize) -> Complex64 {
    [c64(-2.0, 0.0), c64(0.0, 1.0)][k]
}

fn cloud(map: &UnicriticalMap) -> Arc<PostcriticalCloud> {
    Arc::new(PostcriticalCloud::build(map, 1000, 1e-9).unwrap())
}

fn small_complex(radius: f64) -> impl Strategy<Value = Complex64> {
    (0.0..radius, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn preimages_map_back(d in 2u32..6, c in small_complex(1.5), z in small_complex(3.0)) {
        let map = UnicriticalMap::new(d, c).unwrap();
        let pre = map.preimages(z);
        prop_assert_eq!(pre.len(), d as usize);
        for w in pre {
            prop_assert!((map.eval(w) - z).norm() <= 1e-10 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn classification_is_consistent(c in small_complex(2.5)) {
        let map = UnicriticalMap::quadratic(c);
        let class = map.classify(2000, 2.0 * map.escape_radius(), 1e-3).unwrap();
        prop_assert_eq!(class.kind == OrbitKind::Escaping, class.escape_index.is_some());
        if class.kind == OrbitKind::BoundedNonrecurrent {
            prop_assert!(class.recurrence_gap > 1e-3);
        }
    }

    #[test]
    fn cloud_is_forward_invariant(k in 0usize..2, n in 1usize..400) {
        let map = UnicriticalMap::quadratic(parameter(k));
        let cloud = PostcriticalCloud::build(&map, n, 1e-9).unwrap();
        prop_assert!(!cloud.is_empty());
        let last = cloud.generations().iter().copied().max().unwrap();
        for (p, &g) in cloud.points().iter().zip(cloud.generations()) {
            if g != last {
                prop_assert!(cloud.distance(map.eval(*p)) <= 1e-9);
            }
        }
    }

    #[test]
    fn densities_are_bounded_below(d in 2u32..6, z in small_complex(3.0)) {
        let map = UnicriticalMap::new(d, c64(0.0, 0.2)).unwrap();
        let cloud = cloud(&map);
        let rho = SingularMetric::new(d, cloud.clone(), MetricVariant::Rho).unwrap();
        let sigma = SingularMetric::new(d, cloud, MetricVariant::Sigma).unwrap();
        prop_assert_eq!(rho.alpha(), 1.0 - 1.0 / d as f64);
        prop_assert!(rho.density(z) >= 1.0);
        prop_assert!(sigma.density(z) > 0.0);
    }

    #[test]
    fn comparison_sandwich(d in 2u32..9, t in 1e-9f64..1.0) {
        prop_assume!(t < 1.0);
        let v = series_f_times_power(d, t).unwrap();
        prop_assert!(v >= 1.0 / d as f64 && v <= 1.0);
    }

    #[test]
    fn koebe_bounds_are_ordered(deriv in 1e-6f64..1e6, r in 1e-3f64..1e3, q in 0.0f64..0.999) {
        let b = koebe_bounds(deriv, r, q * r).unwrap();
        prop_assert!(0.0 < b.lower && b.lower <= b.upper);
        prop_assert!(b.quarter_radius > 0.0);
    }

    #[test]
    fn pseudo_hyperbolic_is_symmetric(z in small_complex(0.99), w in small_complex(0.99)) {
        let a = pseudo_hyperbolic_unit(z, w).unwrap();
        prop_assert_eq!(a, pseudo_hyperbolic_unit(w, z).unwrap());
        prop_assert!((0.0..1.0).contains(&a));
    }
}

fn chebyshev_grid() -> PathMetricGrid {
    let map = UnicriticalMap::quadratic(c64(-2.0, 0.0));
    let metric = SingularMetric::rho(2, cloud(&map)).unwrap();
    PathMetricGrid::build(metric, Bbox::square(c64(0.0, 0.0), 2.5).unwrap(), 64).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn edge_weights_dominate_length(i in 0usize..64, j in 0usize..64) {
        let g = chebyshev_grid();
        let h = g.spacing();
        for (di, dj) in [(1isize, 0isize), (0, 1), (1, 1), (-1, 1)] {
            if let Some(w) = g.edge_weight(i, j, di, dj) {
                let len = h * ((di * di + dj * dj) as f64).sqrt();
                prop_assert!(w.is_finite() && w >= len * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn grid_distance_is_a_metric(a in (0usize..65, 0usize..65), b in (0usize..65, 0usize..65), c in (0usize..65, 0usize..65)) {
        let g = chebyshev_grid();
        let (a, b, c) = (g.position(a.0, a.1), g.position(b.0, b.1), g.position(c.0, c.1));
        let ab = g.distance(a, b).unwrap();
        prop_assert_eq!(ab, g.distance(b, a).unwrap());
        prop_assert!(ab >= (a - b).norm() * (1.0 - 1e-12));
        let ac = g.distance(a, c).unwrap();
        let cb = g.distance(c, b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn backward_orbits_are_consistent(k in 0usize..2, seed in any::<u64>()) {
        let map = UnicriticalMap::quadratic(parameter(k));
        let cloud = cloud(&map);
        let eps = 0.05 * cloud.diameter();
        let z0 = base_points(&map, &cloud, 1, seed)[0];
        let orbit = backward_orbit(&map, cloud.clone(), z0, eps, 30, &mut BranchRule::random(seed)).unwrap();
        prop_assert_eq!(orbit.levels.len(), 31);
        for n in 1..orbit.levels.len() {
            let (l, p) = (&orbit.levels[n], &orbit.levels[n - 1]);
            prop_assert!((map.eval(l.point) - p.point).norm() <= 1e-10);
            for (i, &b) in l.boundary.iter().enumerate() {
                prop_assert!((map.eval(b) - p.boundary[i % p.boundary.len()]).norm() <= 1e-8);
            }
            prop_assert_eq!(l.diameter, diameter(&l.boundary));
        }
        let critical = orbit.labels().iter().filter(|&&l| l == CaseLabel::Critical).count();
        prop_assert!(critical <= 1);

        let metric = SingularMetric::sigma(2, cloud).unwrap();
        let report = expansion_ratios(&orbit, &metric).unwrap();
        prop_assert!(report.lambda > 1.0, "lambda {}", report.lambda);
        prop_assert_eq!(report.lambda, report.slope.exp());
        prop_assert!(shrink_fit(&orbit).unwrap().theta < 1.0);
        for (n, proxy) in orbit.radius_proxies().iter().enumerate() {
            if let Some(p) = proxy {
                prop_assert!(p.value > 0.0 && p.value <= 1.05 * orbit.levels[n].diameter);
            }
        }
    }

    #[test]
    fn rays_follow_potential_schedule(k in 0usize..2, num in 0u64..31) {
        let map = UnicriticalMap::quadratic(parameter(k));
        let theta = Angle::new(num, 31).unwrap();
        let ray = trace_ray_exact(&map, theta, 15, 1.0, 8).unwrap();
        for w in ray.potentials.windows(2) {
            prop_assert!(w[1] < w[0]);
        }
        for (z, &g) in ray.polyline.iter().zip(&ray.potentials) {
            prop_assert!((map.green_potential(*z, 10_000, 1e10) - g).abs() <= 1e-8);
        }
        let image = trace_ray_exact(&map, theta.multiply(2), 15, 1.0, 8).unwrap();
        for j in 8..ray.polyline.len() {
            prop_assert!((map.eval(ray.polyline[j]) - image.polyline[j - 8]).norm() <= 1e-6);
        }
    }

    #[test]
    fn john_constant_is_at_most_one(k in 0usize..2, num in 0u64..16) {
        let map = UnicriticalMap::quadratic(parameter(k));
        let ray = trace_ray_exact(&map, Angle::new(num, 16).unwrap(), 25, 1.0, 8).unwrap();
        let entry = john_constant_along_ray(&ray, |z| map.julia_distance_estimate(z)).unwrap();
        prop_assert!(entry.constant > 0.0 && entry.constant <= 1.0);
    }
}
