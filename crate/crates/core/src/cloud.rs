//! Finite approximation of the postcritical set with nearest-point queries.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::UnicriticalMap;
use crate::error::{Error, Result};

pub const DEFAULT_DEDUP_TOLERANCE: f64 = 1e-9;

/// `{ f^n(0) : 1 <= n <= N }` with near-duplicates merged.
///
/// Each stored point is the exact iterate of its first occurrence, so `f`
/// of a stored point is again an iterate and lands within the merge
/// tolerance of some stored point (except for the last generation).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PostcriticalCloud {
    points: Vec<Complex64>,
    generations: Vec<usize>,
    iterates: usize,
    tol_dedup: f64,
    #[serde(skip)]
    tree: KdTree,
}

impl PostcriticalCloud {
    pub fn build(map: &UnicriticalMap, n: usize, tol_dedup: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("cloud needs at least one iterate".into()));
        }
        if !(tol_dedup > 0.0) {
            return Err(Error::InvalidParameter(format!("dedup tolerance must be positive, got {tol_dedup}")));
        }
        let orbit = map.critical_orbit(n);
        if let Some(k) = orbit.escaped_at {
            return Err(Error::EscapingOrbit(k));
        }
        let mut points: Vec<Complex64> = Vec::new();
        let mut generations = Vec::new();
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let cell = |z: Complex64| ((z.re / tol_dedup).floor() as i64, (z.im / tol_dedup).floor() as i64);
        for (k, &z) in orbit.points.iter().enumerate() {
            let (cx, cy) = cell(z);
            let duplicate = (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    buckets
                        .get(&(cx + dx, cy + dy))
                        .is_some_and(|ids| ids.iter().any(|&i| (points[i] - z).norm() <= tol_dedup))
                })
            });
            if !duplicate {
                buckets.entry((cx, cy)).or_default().push(points.len());
                points.push(z);
                generations.push(k + 1);
            }
        }
        Ok(Self::from_parts(points, generations, n, tol_dedup))
    }

    /// Cloud over explicitly given points (generation indices are positions).
    pub fn from_points(points: Vec<Complex64>, tol_dedup: f64) -> Self {
        let n = points.len();
        let generations = (1..=n).collect();
        Self::from_parts(points, generations, n, tol_dedup)
    }

    /// The empty cloud: every distance is `+inf` and `rho` collapses to 1.
    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new(), 0, DEFAULT_DEDUP_TOLERANCE)
    }

    fn from_parts(points: Vec<Complex64>, generations: Vec<usize>, iterates: usize, tol_dedup: f64) -> Self {
        let tree = KdTree::build(&points);
        Self { points, generations, iterates, tol_dedup, tree }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Generation index `n` of each stored point (first occurrence of `f^n(0)`).
    pub fn generations(&self) -> &[usize] {
        &self.generations
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iterates(&self) -> usize {
        self.iterates
    }

    pub fn tol_dedup(&self) -> f64 {
        self.tol_dedup
    }

    /// Exact minimum Euclidean distance to the stored points.
    pub fn distance(&self, z: Complex64) -> f64 {
        self.nearest(z).map_or(f64::INFINITY, |(_, d)| d)
    }

    /// Index and distance of the nearest stored point.
    pub fn nearest(&self, z: Complex64) -> Option<(usize, f64)> {
        self.tree.nearest(&self.points, z)
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max((a - b).norm());
            }
        }
        best
    }
}

/// Static 2-d tree over a point slice. Not serialized; a deserialized cloud
/// answers queries by scanning.
#[derive(Clone, Debug, Default)]
struct KdTree {
    nodes: Vec<KdNode>,
    root: Option<usize>,
}

#[derive(Clone, Debug)]
struct KdNode {
    point: usize,
    axis: u8,
    left: Option<usize>,
    right: Option<usize>,
}

fn coord(z: Complex64, axis: u8) -> f64 {
    if axis == 0 {
        z.re
    } else {
        z.im
    }
}

impl KdTree {
    fn build(points: &[Complex64]) -> Self {
        let mut tree = KdTree { nodes: Vec::with_capacity(points.len()), root: None };
        let mut idx: Vec<usize> = (0..points.len()).collect();
        tree.root = tree.build_rec(points, &mut idx, 0);
        tree
    }

    fn build_rec(&mut self, points: &[Complex64], idx: &mut [usize], depth: usize) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let axis = (depth % 2) as u8;
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| coord(points[a], axis).total_cmp(&coord(points[b], axis)));
        let point = idx[mid];
        let (lo, rest) = idx.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build_rec(points, lo, depth + 1);
        let right = self.build_rec(points, hi, depth + 1);
        self.nodes.push(KdNode { point, axis, left, right });
        Some(self.nodes.len() - 1)
    }

    fn nearest(&self, points: &[Complex64], z: Complex64) -> Option<(usize, f64)> {
        if points.is_empty() {
            return None;
        }
        if self.nodes.is_empty() {
            // Deserialized without a tree; fall back to a scan.
            return points.iter().enumerate().map(|(i, p)| (i, (p - z).norm())).min_by(|a, b| a.1.total_cmp(&b.1));
        }
        let mut best = (usize::MAX, f64::INFINITY);
        let mut stack = vec![self.root?];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let p = points[node.point];
            let d = (p - z).norm();
            if d < best.1 || (d == best.1 && node.point < best.0) {
                best = (node.point, d);
            }
            let delta = coord(z, node.axis) - coord(p, node.axis);
            let (near, far) = if delta < 0.0 { (node.left, node.right) } else { (node.right, node.left) };
            if let Some(f) = far {
                if delta.abs() <= best.1 {
                    stack.push(f);
                }
            }
            if let Some(nr) = near {
                stack.push(nr);
            }
        }
        Some(best)
    }
}
