//! Grid discretization of the path metric `d_rho(z0, z1) = inf_gamma int_gamma rho |dz|`.
//!
//! Nodes sit on a square lattice of spacing `h` with 8-neighbour edges. An
//! edge `e` carries `rho(mid(e)) * |e|`, with the cloud distance clamped below
//! by `h / 2` so the singular density stays finite. Octile paths overestimate
//! Euclidean length by at most the factor [`ANISOTROPY`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::metric::{MetricVariant, SingularMetric};

/// Worst-case ratio of octile to Euclidean length, `sqrt(4 - 2 sqrt 2)`.
pub const ANISOTROPY: f64 = 1.082_392_200_292_393_9;
/// A small-scale Hölder constant may exceed the large-scale one by at most
/// this factor before the bound is declared non-uniform.
pub const UNIFORMITY_FACTOR: f64 = 2.0;
pub const MIN_RESOLUTION: usize = 16;
pub const MIN_FIT_PAIRS: usize = 50;
/// Required ratio between the largest and smallest sampled separation.
pub const MIN_SCALE_SPREAD: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub min: Complex64,
    pub max: Complex64,
}

impl Bbox {
    pub fn new(min: Complex64, max: Complex64) -> Result<Self> {
        if !(max.re > min.re && max.im > min.im) {
            return Err(Error::InvalidParameter(format!("empty bounding box {min} .. {max}")));
        }
        Ok(Self { min, max })
    }

    pub fn square(center: Complex64, half_width: f64) -> Result<Self> {
        let d = Complex64::new(half_width, half_width);
        Self::new(center - d, center + d)
    }

    pub fn width(&self) -> f64 {
        self.max.re - self.min.re
    }

    pub fn height(&self) -> f64 {
        self.max.im - self.min.im
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.min.re && z.re <= self.max.re && z.im >= self.min.im && z.im <= self.max.im
    }

    fn margin(&self, z: Complex64) -> f64 {
        (z.re - self.min.re).min(self.max.re - z.re).min(z.im - self.min.im).min(self.max.im - z.im)
    }
}

/// Directions stored per node: E, N, NE, NW.
const STORED: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];

pub struct PathMetricGrid {
    bbox: Bbox,
    n_cols: usize,
    n_rows: usize,
    h: f64,
    metric: SingularMetric,
    weights: Vec<[f64; 4]>,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    key: f64,
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PathMetricGrid {
    /// `resolution` cells across the bounding-box width.
    pub fn build(metric: SingularMetric, bbox: Bbox, resolution: usize) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::InvalidParameter(format!("grid resolution {resolution} below {MIN_RESOLUTION}")));
        }
        let h = bbox.width() / resolution as f64;
        let n_cols = resolution + 1;
        let n_rows = (bbox.height() / h).round() as usize + 1;
        if let Some(p) = metric.cloud().points().iter().find(|&&p| bbox.margin(p) < 2.0 * h) {
            return Err(Error::InvalidParameter(format!(
                "bounding box must contain the cloud with margin 2h = {}; {p} is too close",
                2.0 * h
            )));
        }
        let floor = 0.5 * h;
        let mut grid = Self { bbox, n_cols, n_rows, h, metric, weights: Vec::new() };
        grid.weights = (0..n_cols * n_rows)
            .into_par_iter()
            .map(|node| {
                let (i, j) = (node % n_cols, node / n_cols);
                let here = grid.position(i, j);
                let mut w = [f64::INFINITY; 4];
                for (k, &(di, dj)) in STORED.iter().enumerate() {
                    let (ni, nj) = (i as isize + di, j as isize + dj);
                    if ni < 0 || nj < 0 || ni as usize >= n_cols || nj as usize >= n_rows {
                        continue;
                    }
                    let there = grid.position(ni as usize, nj as usize);
                    let len = h * ((di * di + dj * dj) as f64).sqrt();
                    w[k] = grid.metric.density_capped(0.5 * (here + there), floor) * len;
                }
                w
            })
            .collect();
        Ok(grid)
    }

    pub fn bbox(&self) -> Bbox {
        self.bbox
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_cols, self.n_rows)
    }

    pub fn metric(&self) -> &SingularMetric {
        &self.metric
    }

    pub fn position(&self, i: usize, j: usize) -> Complex64 {
        self.bbox.min + Complex64::new(i as f64 * self.h, j as f64 * self.h)
    }

    fn node_position(&self, node: usize) -> Complex64 {
        self.position(node % self.n_cols, node / self.n_cols)
    }

    /// Grid indices of the node nearest `z`.
    pub fn nearest_node(&self, z: Complex64) -> (usize, usize) {
        let i = ((z.re - self.bbox.min.re) / self.h).round().clamp(0.0, (self.n_cols - 1) as f64);
        let j = ((z.im - self.bbox.min.im) / self.h).round().clamp(0.0, (self.n_rows - 1) as f64);
        (i as usize, j as usize)
    }

    /// Weight of the edge from node `(i, j)` in direction `(di, dj)`.
    pub fn edge_weight(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<f64> {
        let (ni, nj) = (i as isize + di, j as isize + dj);
        if ni < 0 || nj < 0 || ni as usize >= self.n_cols || nj as usize >= self.n_rows {
            return None;
        }
        if di.abs() > 1 || dj.abs() > 1 || (di == 0 && dj == 0) {
            return None;
        }
        // Every undirected edge is stored once, at its lower endpoint.
        let (bi, bj, k) = match (di, dj) {
            (1, 0) => (i, j, 0),
            (-1, 0) => (ni as usize, j, 0),
            (0, 1) => (i, j, 1),
            (0, -1) => (i, nj as usize, 1),
            (1, 1) => (i, j, 2),
            (-1, -1) => (ni as usize, nj as usize, 2),
            (-1, 1) => (i, j, 3),
            (1, -1) => (ni as usize, nj as usize, 3),
            _ => unreachable!(),
        };
        Some(self.weights[bj * self.n_cols + bi][k])
    }

    /// Density with the grid's `h / 2` distance floor.
    pub fn local_density(&self, z: Complex64) -> f64 {
        self.metric.density_capped(z, 0.5 * self.h)
    }

    fn neighbours(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (i, j) = (node % self.n_cols, node / self.n_cols);
        const ALL: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (-1, 1), (1, -1)];
        ALL.iter().filter_map(move |&(di, dj)| {
            let w = self.edge_weight(i, j, di, dj)?;
            let n = (j as isize + dj) as usize * self.n_cols + (i as isize + di) as usize;
            Some((n, w))
        })
    }

    /// Shortest-path weight between two nodes. A* with the Euclidean
    /// heuristic when `rho >= 1` guarantees it is admissible, Dijkstra
    /// otherwise.
    fn node_distance(&self, source: usize, target: usize) -> f64 {
        if source == target {
            return 0.0;
        }
        let use_heuristic = self.metric.variant() == MetricVariant::Rho;
        let goal = self.node_position(target);
        let heuristic = |n: usize| if use_heuristic { (self.node_position(n) - goal).norm() } else { 0.0 };
        let mut dist = vec![f64::INFINITY; self.n_cols * self.n_rows];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry { key: heuristic(source), dist: 0.0, node: source });
        while let Some(Entry { dist: d, node, .. }) = heap.pop() {
            if node == target {
                return d;
            }
            if d > dist[node] {
                continue;
            }
            for (n, w) in self.neighbours(node) {
                let nd = d + w;
                if nd < dist[n] {
                    dist[n] = nd;
                    heap.push(Entry { key: nd + heuristic(n), dist: nd, node: n });
                }
            }
        }
        f64::INFINITY
    }

    /// Approximate `d_rho(z0, z1)`: node-to-node shortest path plus straight
    /// snapping segments from each point to its nearest node.
    ///
    /// Exactly symmetric: the computation is ordered by node index.
    pub fn distance(&self, z0: Complex64, z1: Complex64) -> Result<f64> {
        for z in [z0, z1] {
            if !self.bbox.contains(z) {
                return Err(Error::Domain(format!("{z} outside the grid bounding box")));
            }
        }
        if z0 == z1 {
            return Ok(0.0);
        }
        let index = |z: Complex64| {
            let (i, j) = self.nearest_node(z);
            j * self.n_cols + i
        };
        let (mut a, mut b) = ((z0, index(z0)), (z1, index(z1)));
        if (a.1, a.0.re, a.0.im) > (b.1, b.0.re, b.0.im) {
            std::mem::swap(&mut a, &mut b);
        }
        if a.1 == b.1 {
            return Ok(self.local_density(0.5 * (a.0 + b.0)) * (a.0 - b.0).norm());
        }
        let snap = |(z, node): (Complex64, usize)| {
            let p = self.node_position(node);
            self.local_density(0.5 * (z + p)) * (z - p).norm()
        };
        Ok(self.node_distance(a.1, b.1) + snap(a) + snap(b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMeasurement {
    pub z0: Complex64,
    pub z1: Complex64,
    pub euclidean: f64,
    pub grid: f64,
}

/// Grid distances for many pairs, evaluated in parallel.
pub fn measure_pairs(grid: &PathMetricGrid, pairs: &[(Complex64, Complex64)]) -> Result<Vec<PairMeasurement>> {
    pairs
        .par_iter()
        .map(|&(z0, z1)| Ok(PairMeasurement { z0, z1, euclidean: (z0 - z1).norm(), grid: grid.distance(z0, z1)? }))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundViolation {
    pub index: usize,
    pub grid: f64,
    pub required: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundAudit {
    pub pairs: usize,
    pub violations: Vec<LowerBoundViolation>,
}

/// Check `d_rho >= |z0 - z1| - 2 h rho_local` on every measured pair.
pub fn lower_bound_audit(grid: &PathMetricGrid, measured: &[PairMeasurement]) -> LowerBoundAudit {
    let violations = measured
        .iter()
        .enumerate()
        .filter_map(|(index, m)| {
            let rho_local = grid.local_density(m.z0).max(grid.local_density(m.z1));
            let required = m.euclidean - 2.0 * grid.spacing() * rho_local;
            (m.grid < required).then_some(LowerBoundViolation { index, grid: m.grid, required })
        })
        .collect();
    LowerBoundAudit { pairs: measured.len(), violations }
}

pub fn verify_lower_bound(grid: &PathMetricGrid, pairs: &[(Complex64, Complex64)]) -> Result<LowerBoundAudit> {
    Ok(lower_bound_audit(grid, &measure_pairs(grid, pairs)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoelderFit {
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
    pub sample_count: usize,
}

impl HoelderFit {
    /// Exponents outside `(0, 1.05]` indicate a fit that says nothing.
    pub fn is_degenerate(&self) -> bool {
        !(self.exponent > 0.0 && self.exponent <= 1.05)
    }
}

/// Fit `log d_rho = log C + exponent * log |z0 - z1|`.
pub fn hoelder_fit_measured(measured: &[PairMeasurement]) -> Result<HoelderFit> {
    if measured.len() < MIN_FIT_PAIRS {
        return Err(Error::InsufficientData(format!("{} pairs, need at least {MIN_FIT_PAIRS}", measured.len())));
    }
    if let Some(m) = measured.iter().find(|m| !(m.euclidean > 0.0 && m.euclidean < 1.0)) {
        return Err(Error::InvalidParameter(format!("pair separation {} outside (0, 1)", m.euclidean)));
    }
    let (lo, hi) =
        measured.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m.euclidean), hi.max(m.euclidean)));
    if hi / lo < MIN_SCALE_SPREAD {
        return Err(Error::InsufficientData(format!(
            "separations span only {:.2} decades, need two",
            (hi / lo).log10()
        )));
    }
    let xs: Vec<f64> = measured.iter().map(|m| m.euclidean.ln()).collect();
    let ys: Vec<f64> = measured.iter().map(|m| m.grid.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    Ok(HoelderFit {
        exponent: line.slope,
        constant: line.intercept.exp(),
        r_squared: line.r_squared,
        sample_count: measured.len(),
    })
}

pub fn hoelder_fit(grid: &PathMetricGrid, pairs: &[(Complex64, Complex64)]) -> Result<HoelderFit> {
    hoelder_fit_measured(&measure_pairs(grid, pairs)?)
}

/// Smallest `C` with `d_rho <= C |z0 - z1|^exponent` on all pairs, and the
/// same constant restricted to the smallest decade of separations versus
/// the rest. A bound that holds uniformly has no blow-up at small scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundAudit {
    pub exponent: f64,
    pub constant: f64,
    pub small_scale_constant: f64,
    pub large_scale_constant: f64,
    pub uniform: bool,
}

pub fn upper_bound_audit(measured: &[PairMeasurement], exponent: f64) -> Result<UpperBoundAudit> {
    let lo = measured.iter().map(|m| m.euclidean).fold(f64::INFINITY, f64::min);
    if !lo.is_finite() || lo <= 0.0 {
        return Err(Error::InsufficientData("no pairs with positive separation".into()));
    }
    let ratio = |m: &PairMeasurement| m.grid / m.euclidean.powf(exponent);
    let (mut small, mut large) = (0.0f64, 0.0f64);
    for m in measured {
        if m.euclidean < 10.0 * lo {
            small = small.max(ratio(m));
        } else {
            large = large.max(ratio(m));
        }
    }
    if large == 0.0 {
        return Err(Error::InsufficientData("all separations lie in one decade".into()));
    }
    Ok(UpperBoundAudit {
        exponent,
        constant: small.max(large),
        small_scale_constant: small,
        large_scale_constant: large,
        uniform: small <= UNIFORMITY_FACTOR * large,
    })
}

/// Node-aligned pairs around each center, separations log-uniform in
/// `[s_min, s_max]`, random directions. Pairs that would leave the grid are
/// dropped.
pub fn sample_pairs<R: Rng>(
    grid: &PathMetricGrid,
    centers: &[Complex64],
    per_center: usize,
    s_min: f64,
    s_max: f64,
    rng: &mut R,
) -> Vec<(Complex64, Complex64)> {
    let h = grid.spacing();
    let (n_cols, n_rows) = grid.dims();
    let mut pairs = Vec::new();
    for &center in centers {
        let (ci, cj) = grid.nearest_node(center);
        for k in 0..per_center {
            let frac = if per_center > 1 { k as f64 / (per_center - 1) as f64 } else { 0.0 };
            let s = s_min * (s_max / s_min).powf(frac);
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            let mut di = (s * phi.cos() / h).round() as isize;
            let mut dj = (s * phi.sin() / h).round() as isize;
            if di.abs() <= 1 && dj.abs() <= 1 {
                // Shortest scale: one axis-aligned edge.
                (di, dj) = (1, 0);
            }
            let (ai, aj) = (ci as isize - di / 2, cj as isize - dj / 2);
            let (bi, bj) = (ai + di, aj + dj);
            let inside = |i: isize, j: isize| i >= 0 && j >= 0 && (i as usize) < n_cols && (j as usize) < n_rows;
            if !(inside(ai, aj) && inside(bi, bj)) {
                continue;
            }
            let a = grid.position(ai as usize, aj as usize);
            let b = grid.position(bi as usize, bj as usize);
            if (a - b).norm() < 1.0 {
                pairs.push((a, b));
            }
        }
    }
    pairs
}
