//! The dynamic environment: obstacle shapes, motion laws, distance queries,
//! the safety-inflated environment and obstacle-cluster interpolation.

use serde::{Deserialize, Serialize};

use crate::geometry::{
    min_enclosing_circle, point_polygon, point_segment, ray_capsule, ray_circle,
    ray_convex_polygon, segment_segment, segments_intersect,
};
use crate::math::Vec2;

/// Occupied planar region. Polygon vertices must be convex in CCW order;
/// chains are capsule sequences (segments with a half-width).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Disc { center: Vec2, radius: f64 },
    ConvexPolygon { vertices: Vec<Vec2> },
    Chain { points: Vec<Vec2>, half_width: f64 },
}

impl Shape {
    /// Distance from `p` to this region; 0 plus the penetration flag inside.
    pub fn distance_to_point(&self, p: Vec2) -> PointQuery {
        match self {
            Shape::Disc { center, radius } => {
                let delta = p - *center;
                let dc = delta.norm();
                let dir = if dc > 0.0 {
                    delta * (1.0 / dc)
                } else {
                    Vec2::new(1.0, 0.0)
                };
                PointQuery {
                    distance: (dc - radius).max(0.0),
                    closest: *center + dir * *radius,
                    penetrating: dc < *radius,
                }
            }
            Shape::ConvexPolygon { vertices } => {
                let (d, q, inside) = point_polygon(p, vertices);
                PointQuery {
                    distance: d,
                    closest: q,
                    penetrating: inside,
                }
            }
            Shape::Chain { points, half_width } => {
                let mut best = (f64::INFINITY, Vec2::ZERO);
                for w in points.windows(2) {
                    let (d, q) = point_segment(p, w[0], w[1]);
                    if d < best.0 {
                        best = (d, q);
                    }
                }
                if points.len() == 1 {
                    best = (p.distance(points[0]), points[0]);
                }
                let dir = if best.0 > 0.0 {
                    (p - best.1) * (1.0 / best.0)
                } else {
                    Vec2::new(1.0, 0.0)
                };
                PointQuery {
                    distance: (best.0 - half_width).max(0.0),
                    closest: best.1 + dir * *half_width,
                    penetrating: best.0 < *half_width,
                }
            }
        }
    }

    /// Set distance between two regions (0 when they touch or overlap).
    pub fn distance_to_shape(&self, other: &Shape) -> f64 {
        use Shape::*;
        match (self, other) {
            (
                Disc {
                    center: c1,
                    radius: r1,
                },
                Disc {
                    center: c2,
                    radius: r2,
                },
            ) => (c1.distance(*c2) - r1 - r2).max(0.0),
            (Disc { center, radius }, _) => {
                (other.distance_to_point(*center).distance - radius).max(0.0)
            }
            (_, Disc { .. }) => other.distance_to_shape(self),
            (ConvexPolygon { vertices: va }, ConvexPolygon { vertices: vb }) => {
                polygon_polygon_distance(va, vb)
            }
            (ConvexPolygon { vertices }, Chain { points, half_width })
            | (Chain { points, half_width }, ConvexPolygon { vertices }) => {
                (polygon_chain_distance(vertices, points) - half_width).max(0.0)
            }
            (
                Chain {
                    points: pa,
                    half_width: ha,
                },
                Chain {
                    points: pb,
                    half_width: hb,
                },
            ) => (chain_chain_distance(pa, pb) - ha - hb).max(0.0),
        }
    }

    /// First hit of the ray `origin + s*dir` against this shape grown by `inflate`.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2, inflate: f64) -> Option<f64> {
        match self {
            Shape::Disc { center, radius } => ray_circle(origin, dir, *center, radius + inflate),
            Shape::ConvexPolygon { vertices } => {
                let mut best = ray_convex_polygon(origin, dir, vertices);
                if inflate > 0.0 {
                    let n = vertices.len();
                    for i in 0..n {
                        let s =
                            ray_capsule(origin, dir, vertices[i], vertices[(i + 1) % n], inflate);
                        best = merge_min(best, s);
                    }
                }
                best
            }
            Shape::Chain { points, half_width } => {
                let r = half_width + inflate;
                let mut best = None;
                if points.len() == 1 {
                    return ray_circle(origin, dir, points[0], r);
                }
                for w in points.windows(2) {
                    best = merge_min(best, ray_capsule(origin, dir, w[0], w[1], r));
                }
                best
            }
        }
    }

    /// Boundary sample points, used for enclosing-circle estimation.
    pub fn boundary_samples(&self, per_arc: usize) -> Vec<Vec2> {
        match self {
            Shape::Disc { center, radius } => (0..per_arc)
                .map(|i| {
                    let a = i as f64 / per_arc as f64 * std::f64::consts::TAU;
                    *center + Vec2::from_angle(a) * *radius
                })
                .collect(),
            Shape::ConvexPolygon { vertices } => vertices.clone(),
            Shape::Chain { points, half_width } => {
                let mut out = Vec::new();
                for p in points {
                    for i in 0..per_arc.max(8) {
                        let a = i as f64 / per_arc.max(8) as f64 * std::f64::consts::TAU;
                        out.push(*p + Vec2::from_angle(a) * *half_width);
                    }
                }
                out
            }
        }
    }

    /// Largest distance of any shape point from `pivot` (for rotation speed bounds).
    pub fn max_radius_about(&self, pivot: Vec2) -> f64 {
        match self {
            Shape::Disc { center, radius } => pivot.distance(*center) + radius,
            Shape::ConvexPolygon { vertices } => vertices
                .iter()
                .map(|v| pivot.distance(*v))
                .fold(0.0, f64::max),
            Shape::Chain { points, half_width } => {
                points
                    .iter()
                    .map(|p| pivot.distance(*p))
                    .fold(0.0, f64::max)
                    + half_width
            }
        }
    }
}

fn merge_min(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn polygon_polygon_distance(va: &[Vec2], vb: &[Vec2]) -> f64 {
    use crate::geometry::point_in_convex_polygon;
    if va.iter().any(|v| point_in_convex_polygon(*v, vb))
        || vb.iter().any(|v| point_in_convex_polygon(*v, va))
    {
        return 0.0;
    }
    let na = va.len();
    let nb = vb.len();
    let mut best = f64::INFINITY;
    for i in 0..na {
        for j in 0..nb {
            let d = segment_segment(va[i], va[(i + 1) % na], vb[j], vb[(j + 1) % nb]);
            best = best.min(d);
        }
    }
    best
}

fn polygon_chain_distance(vertices: &[Vec2], points: &[Vec2]) -> f64 {
    use crate::geometry::point_in_convex_polygon;
    if points.iter().any(|p| point_in_convex_polygon(*p, vertices)) {
        return 0.0;
    }
    let n = vertices.len();
    let mut best = f64::INFINITY;
    if points.len() == 1 {
        return point_polygon(points[0], vertices).0;
    }
    for w in points.windows(2) {
        for i in 0..n {
            best = best.min(segment_segment(
                w[0],
                w[1],
                vertices[i],
                vertices[(i + 1) % n],
            ));
        }
    }
    best
}

fn chain_chain_distance(pa: &[Vec2], pb: &[Vec2]) -> f64 {
    let mut best = f64::INFINITY;
    let segs = |pts: &[Vec2]| -> Vec<(Vec2, Vec2)> {
        if pts.len() == 1 {
            vec![(pts[0], pts[0])]
        } else {
            pts.windows(2).map(|w| (w[0], w[1])).collect()
        }
    };
    for (a0, a1) in segs(pa) {
        for (b0, b1) in segs(pb) {
            if segments_intersect(a0, a1, b0, b1) {
                return 0.0;
            }
            best = best.min(segment_segment(a0, a1, b0, b1));
        }
    }
    best
}

/// Result of a point-to-region distance query.
#[derive(Debug, Clone, Copy)]
pub struct PointQuery {
    pub distance: f64,
    pub closest: Vec2,
    pub penetrating: bool,
}

/// How an obstacle moves. Displacements are analytic in t, so queries at any
/// time (including negative lags for chain followers) are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MotionLaw {
    Static,
    ConstantVelocity {
        velocity: Vec2,
    },
    /// Rigid orbit of the whole shape about an external center.
    Arc {
        center: Vec2,
        angular_rate: f64,
    },
    /// Forward drift plus a lateral oscillation; `frequency` in rad/s.
    Sinusoid {
        base_velocity: Vec2,
        amplitude: f64,
        frequency: f64,
    },
    /// Spin in place about a pivot.
    Rotation {
        pivot: Vec2,
        angular_rate: f64,
    },
    /// Chain points trail the leader's displacement history at fixed spacing.
    LeaderChain {
        leader: Box<MotionLaw>,
        spacing: f64,
    },
}

impl MotionLaw {
    /// Translation applied to a body point at time t (rotation handled separately).
    fn translation(&self, t: f64) -> Vec2 {
        match self {
            MotionLaw::Static | MotionLaw::Arc { .. } | MotionLaw::Rotation { .. } => Vec2::ZERO,
            MotionLaw::ConstantVelocity { velocity } => *velocity * t,
            MotionLaw::Sinusoid {
                base_velocity,
                amplitude,
                frequency,
            } => {
                let lateral = lateral_axis(*base_velocity);
                *base_velocity * t + lateral * (*amplitude * (frequency * t).sin())
            }
            MotionLaw::LeaderChain { leader, .. } => leader.translation(t),
        }
    }

    fn transform_point(&self, p: Vec2, t: f64) -> Vec2 {
        match self {
            MotionLaw::Arc {
                center,
                angular_rate,
            }
            | MotionLaw::Rotation {
                pivot: center,
                angular_rate,
            } => *center + (p - *center).rotated(angular_rate * t),
            _ => p + self.translation(t),
        }
    }

    /// Nominal forward speed, used to convert follower spacing to a time lag.
    fn nominal_speed(&self) -> f64 {
        match self {
            MotionLaw::Static => 0.0,
            MotionLaw::ConstantVelocity { velocity } => velocity.norm(),
            MotionLaw::Sinusoid { base_velocity, .. } => base_velocity.norm(),
            MotionLaw::Arc { .. } | MotionLaw::Rotation { .. } => 0.0,
            MotionLaw::LeaderChain { leader, .. } => leader.nominal_speed(),
        }
    }

    /// Upper bound on the instantaneous speed of any point of `shape` under this law.
    pub fn max_point_speed(&self, shape: &Shape) -> f64 {
        match self {
            MotionLaw::Static => 0.0,
            MotionLaw::ConstantVelocity { velocity } => velocity.norm(),
            MotionLaw::Sinusoid {
                base_velocity,
                amplitude,
                frequency,
            } => base_velocity.norm().hypot(amplitude * frequency),
            MotionLaw::Arc {
                center,
                angular_rate,
            }
            | MotionLaw::Rotation {
                pivot: center,
                angular_rate,
            } => angular_rate.abs() * shape.max_radius_about(*center),
            MotionLaw::LeaderChain { leader, .. } => leader.max_point_speed(shape),
        }
    }
}

fn lateral_axis(base: Vec2) -> Vec2 {
    if base.norm_squared() > 0.0 {
        base.perp().normalized()
    } else {
        Vec2::new(0.0, 1.0)
    }
}

/// One obstacle: a region at t = 0 plus a motion law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: usize,
    pub shape: Shape,
    pub motion: MotionLaw,
}

impl Obstacle {
    /// Shape in world coordinates at time `t`.
    pub fn placed_at(&self, t: f64) -> Shape {
        match (&self.motion, &self.shape) {
            (MotionLaw::LeaderChain { leader, spacing }, Shape::Chain { points, half_width }) => {
                let speed = leader.nominal_speed();
                let lag = if speed > 0.0 { spacing / speed } else { 0.0 };
                let moved: Vec<Vec2> = points
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let tk = t - k as f64 * lag;
                        let t0 = -(k as f64) * lag;
                        *p + leader.translation(tk) - leader.translation(t0)
                    })
                    .collect();
                Shape::Chain {
                    points: moved,
                    half_width: *half_width,
                }
            }
            (motion, Shape::Disc { center, radius }) => Shape::Disc {
                center: motion.transform_point(*center, t),
                radius: *radius,
            },
            (motion, Shape::ConvexPolygon { vertices }) => Shape::ConvexPolygon {
                vertices: vertices
                    .iter()
                    .map(|v| motion.transform_point(*v, t))
                    .collect(),
            },
            (motion, Shape::Chain { points, half_width }) => Shape::Chain {
                points: points
                    .iter()
                    .map(|p| motion.transform_point(*p, t))
                    .collect(),
                half_width: *half_width,
            },
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.motion.max_point_speed(&self.shape)
    }
}

/// An obstacle's shape evaluated at a specific time.
#[derive(Debug, Clone)]
pub struct PlacedObstacle {
    pub id: usize,
    pub shape: Shape,
}

/// The full dynamic environment plus the cluster-merge threshold and safety margin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Environment {
    pub obstacles: Vec<Obstacle>,
    /// Obstacles with set distance at or below this are sensed as one group.
    pub interpolation_gap: f64,
    pub d_safe: f64,
}

impl Environment {
    pub fn new(obstacles: Vec<Obstacle>, interpolation_gap: f64, d_safe: f64) -> Self {
        Environment {
            obstacles,
            interpolation_gap,
            d_safe,
        }
    }

    pub fn occupied_at(&self, t: f64) -> Vec<PlacedObstacle> {
        self.obstacles
            .iter()
            .map(|o| PlacedObstacle {
                id: o.id,
                shape: o.placed_at(t),
            })
            .collect()
    }

    /// Minimum distance from `r` to any obstacle; ties go to the lowest id.
    pub fn distance_to_environment(&self, t: f64, r: Vec2) -> DistanceQuery {
        let mut best = DistanceQuery {
            distance: f64::INFINITY,
            closest: Vec2::ZERO,
            obstacle_id: None,
            penetrating: false,
        };
        for placed in self.occupied_at(t) {
            let q = placed.shape.distance_to_point(r);
            if q.distance < best.distance {
                best = DistanceQuery {
                    distance: q.distance,
                    closest: q.closest,
                    obstacle_id: Some(placed.id),
                    penetrating: q.penetrating,
                };
            } else if q.penetrating && !best.penetrating {
                best.penetrating = true;
                best.obstacle_id = Some(placed.id);
                best.closest = q.closest;
                best.distance = 0.0;
            }
        }
        best
    }

    /// Distance to the d_safe-inflated environment, floored at 0.
    pub fn enlarged_distance(&self, t: f64, r: Vec2) -> f64 {
        (self.distance_to_environment(t, r).distance - self.d_safe).max(0.0)
    }

    /// Union-find over obstacles whose pairwise set distance at `t` is within
    /// the interpolation gap; each group is sensed as one deformed object.
    pub fn interpolate_clusters(&self, t: f64) -> Vec<ObstacleGroup> {
        let placed = self.occupied_at(t);
        let n = placed.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let root = find(parent, parent[i]);
                parent[i] = root;
            }
            parent[i]
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if placed[i].shape.distance_to_shape(&placed[j].shape) <= self.interpolation_gap {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<PlacedObstacle>> = Default::default();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(placed[i].clone());
        }
        let mut out: Vec<ObstacleGroup> = groups
            .into_values()
            .map(|mut members| {
                members.sort_by_key(|m| m.id);
                ObstacleGroup { members }
            })
            .collect();
        out.sort_by_key(|g| g.id());
        out
    }

    /// Safety verdict per the closed condition d >= d_safe, with the margin.
    pub fn collision_check(&self, t: f64, r: Vec2, d_safe: f64) -> (bool, f64) {
        let d = self.distance_to_environment(t, r).distance;
        (d >= d_safe, d - d_safe)
    }

    /// Upper bound on any obstacle point speed (the environment displacement speed).
    pub fn max_obstacle_speed(&self) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.max_speed())
            .fold(0.0, f64::max)
    }
}

/// Result of a nearest-obstacle query.
#[derive(Debug, Clone, Copy)]
pub struct DistanceQuery {
    pub distance: f64,
    pub closest: Vec2,
    pub obstacle_id: Option<usize>,
    pub penetrating: bool,
}

/// A merged cluster of closely positioned obstacles, treated as one object.
#[derive(Debug, Clone)]
pub struct ObstacleGroup {
    pub members: Vec<PlacedObstacle>,
}

impl ObstacleGroup {
    /// Group id: the lowest member obstacle id.
    pub fn id(&self) -> usize {
        self.members
            .iter()
            .map(|m| m.id)
            .min()
            .expect("empty group")
    }

    pub fn distance_to_point(&self, p: Vec2) -> PointQuery {
        let mut best = PointQuery {
            distance: f64::INFINITY,
            closest: Vec2::ZERO,
            penetrating: false,
        };
        for m in &self.members {
            let q = m.shape.distance_to_point(p);
            if q.distance < best.distance || (q.penetrating && !best.penetrating) {
                let pen = q.penetrating || best.penetrating;
                best = q;
                best.penetrating = pen;
            }
        }
        best
    }

    /// Minimal enclosing circle of the whole group (sampled boundaries).
    pub fn enclosing_circle(&self) -> (Vec2, f64) {
        let mut pts = Vec::new();
        for m in &self.members {
            pts.extend(m.shape.boundary_samples(128));
        }
        min_enclosing_circle(&pts)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.members
            .iter()
            .any(|m| m.shape.distance_to_point(p).penetrating)
    }
}
