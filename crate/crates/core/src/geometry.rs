//! Low-level planar geometry: point/segment/segment distances, ray-circle and
//! ray-segment intersections, convex-polygon queries, minimal enclosing circle.

use crate::math::Vec2;

/// Distance from `p` to segment `ab`, with the closest point on the segment.
pub fn point_segment(p: Vec2, a: Vec2, b: Vec2) -> (f64, Vec2) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p.distance(a), a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    let q = a + ab * t;
    (p.distance(q), q)
}

/// Shortest distance between segments `a0a1` and `b0b1`.
pub fn segment_segment(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> f64 {
    if segments_intersect(a0, a1, b0, b1) {
        return 0.0;
    }
    point_segment(a0, b0, b1)
        .0
        .min(point_segment(a1, b0, b1).0)
        .min(point_segment(b0, a0, a1).0)
        .min(point_segment(b1, a0, a1).0)
}

/// Proper or touching intersection test for two segments.
pub fn segments_intersect(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = (a1 - a0).cross(b0 - a0);
    let d2 = (a1 - a0).cross(b1 - a0);
    let d3 = (b1 - b0).cross(a0 - b0);
    let d4 = (b1 - b0).cross(a1 - b0);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |d: f64, p: Vec2, q0: Vec2, q1: Vec2| {
        d == 0.0
            && p.x >= q0.x.min(q1.x)
            && p.x <= q0.x.max(q1.x)
            && p.y >= q0.y.min(q1.y)
            && p.y <= q0.y.max(q1.y)
    };
    on(d1, b0, a0, a1) || on(d2, b1, a0, a1) || on(d3, a0, b0, b1) || on(d4, a1, b0, b1)
}

/// Is `p` inside (or on the boundary of) the CCW convex polygon?
pub fn point_in_convex_polygon(p: Vec2, vertices: &[Vec2]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if (b - a).cross(p - a) < 0.0 {
            return false;
        }
    }
    true
}

/// Distance from an external point to a CCW convex polygon boundary.
/// Returns 0 with the nearest boundary point when `p` is inside.
pub fn point_polygon(p: Vec2, vertices: &[Vec2]) -> (f64, Vec2, bool) {
    let n = vertices.len();
    let mut best = (f64::INFINITY, Vec2::ZERO);
    for i in 0..n {
        let (d, q) = point_segment(p, vertices[i], vertices[(i + 1) % n]);
        if d < best.0 {
            best = (d, q);
        }
    }
    if point_in_convex_polygon(p, vertices) {
        (0.0, best.1, true)
    } else {
        (best.0, best.1, false)
    }
}

/// Smallest s >= 0 with `origin + s*dir` on the circle boundary or inside it.
pub fn ray_circle(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let oc = origin - center;
    if oc.norm() <= radius {
        return Some(0.0);
    }
    let b = oc.dot(dir);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = -b - disc.sqrt();
    if s >= 0.0 {
        Some(s)
    } else {
        None
    }
}

/// Smallest s >= 0 with `origin + s*dir` on segment `ab`.
pub fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let ab = b - a;
    let denom = dir.cross(ab);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = a - origin;
    let s = ao.cross(ab) / denom;
    let u = ao.cross(dir) / denom;
    if s >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(s)
    } else {
        None
    }
}

/// Smallest s >= 0 where the ray enters the capsule around segment `ab`.
pub fn ray_capsule(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2, radius: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut push = |s: Option<f64>| {
        if let Some(s) = s {
            best = Some(best.map_or(s, |b: f64| b.min(s)));
        }
    };
    push(ray_circle(origin, dir, a, radius));
    push(ray_circle(origin, dir, b, radius));
    let ab = b - a;
    if ab.norm_squared() > 0.0 {
        let n = ab.perp().normalized() * radius;
        push(ray_segment(origin, dir, a + n, b + n));
        push(ray_segment(origin, dir, a - n, b - n));
    }
    best
}

/// Smallest s >= 0 where the ray enters a CCW convex polygon.
pub fn ray_convex_polygon(origin: Vec2, dir: Vec2, vertices: &[Vec2]) -> Option<f64> {
    if point_in_convex_polygon(origin, vertices) {
        return Some(0.0);
    }
    let n = vertices.len();
    let mut best: Option<f64> = None;
    for i in 0..n {
        if let Some(s) = ray_segment(origin, dir, vertices[i], vertices[(i + 1) % n]) {
            best = Some(best.map_or(s, |b: f64| b.min(s)));
        }
    }
    best
}

/// Minimal enclosing circle of a point set (Welzl's algorithm).
pub fn min_enclosing_circle(points: &[Vec2]) -> (Vec2, f64) {
    assert!(!points.is_empty(), "min_enclosing_circle: empty point set");
    // Deterministic shuffle: a fixed LCG keeps runs reproducible.
    let mut pts: Vec<Vec2> = points.to_vec();
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    for i in (1..pts.len()).rev() {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let j = (state >> 33) as usize % (i + 1);
        pts.swap(i, j);
    }
    welzl(&mut pts)
}

fn welzl(points: &mut [Vec2]) -> (Vec2, f64) {
    let n = points.len();
    let mut c = (points[0], 0.0);
    for i in 1..n {
        if !in_circle(points[i], c) {
            c = (points[i], 0.0);
            for j in 0..i {
                if !in_circle(points[j], c) {
                    c = circle_two(points[i], points[j]);
                    for k in 0..j {
                        if !in_circle(points[k], c) {
                            c = circle_three(points[i], points[j], points[k]);
                        }
                    }
                }
            }
        }
    }
    c
}

fn in_circle(p: Vec2, (c, r): (Vec2, f64)) -> bool {
    p.distance(c) <= r + 1e-10
}

fn circle_two(a: Vec2, b: Vec2) -> (Vec2, f64) {
    let c = (a + b) * 0.5;
    (c, c.distance(a))
}

fn circle_three(a: Vec2, b: Vec2, p: Vec2) -> (Vec2, f64) {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let apx = p.x - a.x;
    let apy = p.y - a.y;
    let d = 2.0 * (abx * apy - aby * apx);
    if d.abs() < 1e-18 {
        // Collinear; fall back to the widest pair.
        let c1 = circle_two(a, b);
        let c2 = circle_two(a, p);
        let c3 = circle_two(b, p);
        let mut best = c1;
        for c in [c2, c3] {
            if c.1 > best.1 {
                best = c;
            }
        }
        return best;
    }
    let b2 = abx * abx + aby * aby;
    let p2 = apx * apx + apy * apy;
    let ux = (apy * b2 - aby * p2) / d;
    let uy = (abx * p2 - apx * b2) / d;
    let center = Vec2::new(a.x + ux, a.y + uy);
    (center, center.distance(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn point_segment_basics() {
        let (d, q) = point_segment(
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 0.0),
            Vec2::new(1.0, 0.0),
        );
        assert_abs_diff_eq!(d, 1.0);
        assert_abs_diff_eq!(q.x, 0.0);
        let (d, q) = point_segment(
            Vec2::new(3.0, 0.0),
            Vec2::new(-1.0, 0.0),
            Vec2::new(1.0, 0.0),
        );
        assert_abs_diff_eq!(d, 2.0);
        assert_abs_diff_eq!(q.x, 1.0);
    }

    #[test]
    fn segment_segment_parallel_and_crossing() {
        let d = segment_segment(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
        );
        assert_abs_diff_eq!(d, 1.0);
        let d = segment_segment(
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
            Vec2::new(1.0, -1.0),
        );
        assert_eq!(d, 0.0);
    }

    #[test]
    fn ray_circle_hits() {
        let s = ray_circle(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(5.0, 0.0), 1.0);
        assert_abs_diff_eq!(s.unwrap(), 4.0);
        assert!(ray_circle(Vec2::ZERO, Vec2::new(-1.0, 0.0), Vec2::new(5.0, 0.0), 1.0).is_none());
        assert_eq!(
            ray_circle(
                Vec2::new(5.0, 0.5),
                Vec2::new(1.0, 0.0),
                Vec2::new(5.0, 0.0),
                1.0
            ),
            Some(0.0)
        );
    }

    #[test]
    fn ray_polygon_entry() {
        let square = [
            Vec2::new(2.0, -1.0),
            Vec2::new(4.0, -1.0),
            Vec2::new(4.0, 1.0),
            Vec2::new(2.0, 1.0),
        ];
        let s = ray_convex_polygon(Vec2::ZERO, Vec2::new(1.0, 0.0), &square);
        assert_abs_diff_eq!(s.unwrap(), 2.0);
        assert!(ray_convex_polygon(Vec2::ZERO, Vec2::new(0.0, 1.0), &square).is_none());
    }

    #[test]
    fn mec_of_square() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
        ];
        let (c, r) = min_enclosing_circle(&pts);
        assert_abs_diff_eq!(c.x, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.y, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-9);
    }
}
