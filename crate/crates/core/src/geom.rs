//! Small planar geometry kit shared by every module.

use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;

#[inline]
pub fn vec2(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// Twice the signed area of `(a, b, c)`; positive when counter-clockwise.
#[inline]
pub fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    (b - a).perp(&(c - a))
}

#[inline]
pub fn triangle_area(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    0.5 * orient(a, b, c)
}

/// Normalized shape quality in (0, 1]; 1 for the equilateral triangle, <= 0 when inverted.
pub fn triangle_quality(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    let l2 = (b - a).norm_squared() + (c - b).norm_squared() + (a - c).norm_squared();
    if l2 <= 0.0 {
        return 0.0;
    }
    4.0 * 3f64.sqrt() * triangle_area(a, b, c) / l2
}

#[inline]
pub fn centroid(a: &Vec2, b: &Vec2, c: &Vec2) -> Vec2 {
    (a + b + c) / 3.0
}

/// Counter-clockwise rotation by 90 degrees.
#[inline]
pub fn rot90(v: &Vec2) -> Vec2 {
    vec2(-v.y, v.x)
}

/// Parameters `t` in `(lo, hi)` where segment `a + t (b - a)` meets the circle.
pub fn segment_circle_params(a: &Vec2, b: &Vec2, center: &Vec2, r: f64, lo: f64, hi: f64) -> Vec<f64> {
    let d = b - a;
    let f = a - center;
    let qa = d.norm_squared();
    if qa == 0.0 {
        return Vec::new();
    }
    let qb = 2.0 * f.dot(&d);
    let qc = f.norm_squared() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    // numerically stable pair of roots
    let q = -0.5 * (qb + qb.signum() * s);
    let mut roots = Vec::with_capacity(2);
    if q != 0.0 {
        roots.push(q / qa);
        roots.push(qc / q);
    } else {
        roots.push(0.0);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    roots.into_iter().filter(|t| *t > lo && *t < hi).collect()
}

/// Distance from `p` to segment `ab` together with the clamped projection parameter.
pub fn point_segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> (f64, f64) {
    let d = b - a;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return ((p - a).norm(), 0.0);
    }
    let t = ((p - a).dot(&d) / l2).clamp(0.0, 1.0);
    ((a + d * t - p).norm(), t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_of_equilateral_is_one() {
        let q = triangle_quality(&vec2(0.0, 0.0), &vec2(1.0, 0.0), &vec2(0.5, 3f64.sqrt() / 2.0));
        assert!((q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverted_triangle_has_negative_area() {
        assert!(triangle_area(&vec2(0.0, 0.0), &vec2(0.0, 1.0), &vec2(1.0, 0.0)) < 0.0);
    }

    #[test]
    fn segment_crossing_circle_twice() {
        let ts = segment_circle_params(&vec2(-2.0, 0.0), &vec2(2.0, 0.0), &vec2(0.0, 0.0), 1.0, 0.0, 1.0);
        assert_eq!(ts.len(), 2);
        assert!((ts[0] - 0.25).abs() < 1e-12 && (ts[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn segment_missing_circle() {
        let ts = segment_circle_params(&vec2(-2.0, 2.0), &vec2(2.0, 2.0), &vec2(0.0, 0.0), 1.0, 0.0, 1.0);
        assert!(ts.is_empty());
    }
}
