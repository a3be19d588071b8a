//! Small planar helpers shared by point location and mask code.

use num_complex::Complex64;

pub fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Orientation of `c` relative to the directed line `a → b`.
pub fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    cross(b - a, c - a)
}

pub fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Proper crossing of segments `p1p2` and `q1q2` under a half-open rule on
/// the `q` side, so a path through a shared polyline vertex counts once.
pub fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = orient(p1, p2, q1);
    let d2 = orient(p1, p2, q2);
    if (d1 > 0.0) == (d2 > 0.0) {
        return false;
    }
    let d3 = orient(q1, q2, p1);
    let d4 = orient(q1, q2, p2);
    (d3 > 0.0) != (d4 > 0.0)
}

/// Distance between segments `p1p2` and `q1q2` (zero when they cross).
pub fn segment_segment_distance(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> f64 {
    let d1 = orient(p1, p2, q1);
    let d2 = orient(p1, p2, q2);
    let d3 = orient(q1, q2, p1);
    let d4 = orient(q1, q2, p2);
    if ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0)) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn crossing_basics() {
        assert!(segments_cross(c(0.0, -1.0), c(0.0, 1.0), c(-1.0, 0.0), c(1.0, 0.0)));
        assert!(!segments_cross(c(0.0, 1.0), c(0.0, 2.0), c(-1.0, 0.0), c(1.0, 0.0)));
        // A path through the shared vertex of two consecutive polyline
        // segments is counted exactly once.
        let poly = [c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let count = poly.windows(2).filter(|w| segments_cross(c(0.0, -1.0), c(0.0, 1.0), w[0], w[1])).count();
        assert_eq!(count, 1);
        assert_eq!(segment_segment_distance(c(0.0, 1.0), c(1.0, 1.0), c(0.0, 0.0), c(1.0, 0.0)), 1.0);
    }
}
