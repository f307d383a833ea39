//! Planar polygon predicates used to classify pulled-back disks.

use num_complex::Complex64;

#[inline]
fn is_left(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    (b.re - a.re) * (p.im - a.im) - (p.re - a.re) * (b.im - a.im)
}

/// Winding number of the closed polygon `poly` around `p` (Sunday's
/// crossing rule). Zero for points on the outside.
pub fn winding_number(poly: &[Complex64], p: Complex64) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a.im <= p.im {
            if b.im > p.im && is_left(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.im <= p.im && is_left(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Even-odd (crossing parity) membership test.
pub fn contains_even_odd(poly: &[Complex64], p: Complex64) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = (b.re - a.re) * (p.im - a.im) / (b.im - a.im) + a.re;
            if p.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segments_cross(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = is_left(c, d, a);
    let d2 = is_left(c, d, b);
    let d3 = is_left(a, b, c);
    let d4 = is_left(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Whether two non-adjacent edges of the closed polygon cross properly.
pub fn has_self_intersection(poly: &[Complex64]) -> bool {
    let n = poly.len();
    if n < 4 {
        return false;
    }
    let edge = |i: usize| (poly[i], poly[(i + 1) % n]);
    let bbox = |(a, b): (Complex64, Complex64)| (a.re.min(b.re), a.re.max(b.re), a.im.min(b.im), a.im.max(b.im));
    let boxes: Vec<_> = (0..n).map(|i| bbox(edge(i))).collect();
    for (i, &bi) in boxes.iter().enumerate() {
        for (j, &bj) in boxes.iter().enumerate().skip(i + 2) {
            if i == 0 && j == n - 1 {
                continue;
            }
            if bi.1 < bj.0 || bj.1 < bi.0 || bi.3 < bj.2 || bj.3 < bi.2 {
                continue;
            }
            let (a, b) = edge(i);
            let (c, d) = edge(j);
            if segments_cross(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

/// Largest pairwise distance.
pub fn diameter(points: &[Complex64]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max((a - b).norm_sqr());
        }
    }
    best.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(center: Complex64, r: f64, m: usize) -> Vec<Complex64> {
        (0..m).map(|k| center + Complex64::from_polar(r, TAU * k as f64 / m as f64)).collect()
    }

    #[test]
    fn winding_of_circle() {
        let poly = circle(Complex64::new(0.0, 0.0), 1.0, 64);
        assert_eq!(winding_number(&poly, Complex64::new(0.1, 0.2)), 1);
        assert_eq!(winding_number(&poly, Complex64::new(2.0, 0.0)), 0);
        let rev: Vec<_> = poly.iter().rev().copied().collect();
        assert_eq!(winding_number(&rev, Complex64::new(0.0, 0.0)), -1);
    }

    #[test]
    fn double_loop_winds_twice() {
        let mut poly = circle(Complex64::new(0.0, 0.0), 1.0, 32);
        poly.extend(circle(Complex64::new(0.0, 0.0), 1.0, 32));
        assert_eq!(winding_number(&poly, Complex64::new(0.0, 0.0)), 2);
    }

    #[test]
    fn even_odd_matches_winding_for_simple_polygons() {
        let poly = circle(Complex64::new(1.0, -1.0), 0.5, 40);
        for p in [Complex64::new(1.0, -1.0), Complex64::new(1.3, -0.8), Complex64::new(0.0, 0.0)] {
            assert_eq!(contains_even_odd(&poly, p), winding_number(&poly, p) != 0);
        }
    }

    #[test]
    fn detects_bow_tie() {
        let bow =
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        assert!(has_self_intersection(&bow));
        assert!(!has_self_intersection(&circle(Complex64::new(0.0, 0.0), 1.0, 50)));
    }

    #[test]
    fn diameter_of_square() {
        let sq =
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(0.0, 1.0)];
        assert!((diameter(&sq) - 2f64.sqrt()).abs() < 1e-15);
    }
}
