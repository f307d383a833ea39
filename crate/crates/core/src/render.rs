//! Raster renders as binary PPM (P6).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::UnicriticalMap;
use crate::error::{Error, Result};
use crate::metric::{MetricVariant, SingularMetric};
use crate::path_metric::Bbox;
use crate::rays::{trace_ray, DEFAULT_G0};

pub const MAX_SIDE: usize = 16384;
pub const DEFAULT_MAX_ITER: usize = 500;
const OVERLAY_DEPTH: usize = 30;
const RAY_COLOR: [u8; 3] = [0, 255, 255];
const SATURATED: [u8; 3] = [255, 255, 255];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layer {
    EscapeTime,
    DensityRho,
    DensitySigma,
    DistanceToP,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub bbox: Bbox,
    pub width: usize,
    pub height: usize,
    pub layer: Layer,
    pub rays: Vec<f64>,
    pub max_iter: usize,
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.width > MAX_SIDE || self.height > MAX_SIDE {
            return Err(Error::InvalidParameter(format!(
                "image size {}x{} outside 1..={MAX_SIDE} per side",
                self.width, self.height
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        if let Some(t) = self.rays.iter().find(|t| !(0.0..1.0).contains(*t)) {
            return Err(Error::InvalidParameter(format!("ray angle {t} not in [0, 1)")));
        }
        Ok(())
    }

    /// Center of pixel `(x, y)`, row 0 at the top.
    pub fn pixel_center(&self, x: usize, y: usize) -> Complex64 {
        let (w, h) = (self.bbox.width(), self.bbox.height());
        Complex64::new(
            self.bbox.min.re + (x as f64 + 0.5) * w / self.width as f64,
            self.bbox.max.im - (y as f64 + 0.5) * h / self.height as f64,
        )
    }

    /// Pixel containing `z`, if inside the box.
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        if !self.bbox.contains(z) {
            return None;
        }
        let x = ((z.re - self.bbox.min.re) / self.bbox.width() * self.width as f64) as usize;
        let y = ((self.bbox.max.im - z.im) / self.bbox.height() * self.height as f64) as usize;
        Some((x.min(self.width - 1), y.min(self.height - 1)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    fn set(&mut self, x: usize, y: usize, color: [u8; 3]) {
        self.pixels[y * self.width + x] = color;
    }
}

/// Black through red and yellow to white.
fn heat(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let ch = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    [ch(3.0 * t), ch(3.0 * t - 1.0), ch(3.0 * t - 2.0)]
}

fn escape_time(map: &UnicriticalMap, z: Complex64, max_iter: usize) -> Option<usize> {
    let r2 = map.escape_radius().powi(2);
    let mut w = z;
    for n in 0..max_iter {
        if w.norm_sqr() > r2 {
            return Some(n);
        }
        w = map.eval(w);
    }
    None
}

pub fn render(map: &UnicriticalMap, metric: &SingularMetric, spec: &RenderSpec) -> Result<Image> {
    spec.validate()?;
    let n = spec.width * spec.height;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let z = spec.pixel_center(k % spec.width, k / spec.width);
            match spec.layer {
                Layer::EscapeTime => escape_time(map, z, spec.max_iter).map_or(-1.0, |it| it as f64),
                Layer::DensityRho | Layer::DensitySigma | Layer::DistanceToP => metric.cloud().distance(z),
            }
        })
        .collect();

    let mut image = Image { width: spec.width, height: spec.height, pixels: vec![[0, 0, 0]; n] };
    match spec.layer {
        Layer::EscapeTime => {
            let top = values.iter().fold(1.0f64, |m, &v| m.max(v));
            for (p, &v) in image.pixels.iter_mut().zip(&values) {
                // Bounded pixels stay black.
                if v >= 0.0 {
                    let t = 1.0 - (v + 1.0).ln() / (top + 1.0).ln();
                    *p = heat(0.25 + 0.75 * t);
                }
            }
        }
        layer => {
            let alpha = metric.alpha();
            // Log-brightness grows towards the cloud for all three layers.
            let score = |dist: f64| match layer {
                Layer::DensityRho => (1.0 + dist.powf(-alpha)).ln(),
                Layer::DensitySigma => -alpha * dist.ln(),
                _ => -dist.ln(),
            };
            let scores: Vec<f64> = values.iter().map(|&d| score(d)).collect();
            let finite = scores.iter().copied().filter(|s| s.is_finite());
            let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s), b.max(s)));
            let span = if hi > lo { hi - lo } else { 1.0 };
            for (p, &s) in image.pixels.iter_mut().zip(&scores) {
                *p = if s.is_finite() { heat((s - lo) / span) } else { SATURATED };
            }
            for &q in metric.cloud().points() {
                if let Some((x, y)) = spec.pixel_of(q) {
                    image.set(x, y, SATURATED);
                }
            }
        }
    }

    for &theta in &spec.rays {
        let ray = trace_ray(map, theta, OVERLAY_DEPTH, DEFAULT_G0)?;
        for seg in ray.polyline.windows(2) {
            draw_segment(&mut image, spec, seg[0], seg[1]);
        }
    }
    Ok(image)
}

fn draw_segment(image: &mut Image, spec: &RenderSpec, a: Complex64, b: Complex64) {
    let px = spec.bbox.width() / spec.width as f64;
    let steps = ((b - a).norm() / (0.5 * px)).ceil().max(1.0) as usize;
    for k in 0..=steps {
        let z = a + (b - a) * (k as f64 / steps as f64);
        if let Some((x, y)) = spec.pixel_of(z) {
            image.set(x, y, RAY_COLOR);
        }
    }
}

/// Metric matching a density layer; the escape-time layer ignores it.
pub fn layer_variant(layer: Layer) -> MetricVariant {
    match layer {
        Layer::DensitySigma => MetricVariant::Sigma,
        _ => MetricVariant::Rho,
    }
}
