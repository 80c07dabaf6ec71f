//! The three information models: range-only readings with a rate estimate,
//! vision cones with an obstacle velocity estimate, and the binary sector
//! function over the look-ahead disc.

use crate::error::SensingError;
use crate::math::{wrap_angle, Pose, Vec2};
use crate::world::{Environment, ObstacleGroup, Shape};
use std::f64::consts::{FRAC_PI_2, PI};

/// Range-only measurement: distance to the nearest obstacle group and its rate.
#[derive(Debug, Clone, Copy)]
pub struct RangeReading {
    pub distance: f64,
    /// Finite-difference estimate of d-dot over one sensing period.
    pub rate: f64,
    pub group_id: Option<usize>,
}

/// Stateful range sensor: differentiates the distance signal between calls.
///
/// Call exactly once per control period. The optional 2-sample smoothing damps
/// sign chattering in the rate estimate.
#[derive(Debug, Clone)]
pub struct RangeSensor {
    pub period: f64,
    pub smoothing: bool,
    /// Readings at or beyond this distance report no obstacle.
    pub max_range: Option<f64>,
    last_distance: Option<f64>,
    last_raw_rate: f64,
}

impl RangeSensor {
    pub fn new(period: f64, smoothing: bool, max_range: Option<f64>) -> Self {
        assert!(period > 0.0, "sensing period must be positive");
        RangeSensor {
            period,
            smoothing,
            max_range,
            last_distance: None,
            last_raw_rate: 0.0,
        }
    }

    pub fn sense(&mut self, env: &Environment, t: f64, pose: &Pose) -> RangeReading {
        let groups = env.interpolate_clusters(t);
        let p = pose.position();
        let mut best: Option<(f64, usize)> = None;
        for g in &groups {
            let q = g.distance_to_point(p);
            if best.map_or(true, |(d, _)| q.distance < d) {
                best = Some((q.distance, g.id()));
            }
        }
        let (distance, group_id) = match best {
            Some((d, id)) if self.max_range.map_or(true, |cap| d < cap) => (d, Some(id)),
            Some(_) | None => (self.max_range.unwrap_or(f64::INFINITY), None),
        };
        let raw = match self.last_distance {
            Some(prev) => (distance - prev) / self.period,
            None => 0.0,
        };
        let rate = if self.smoothing {
            0.5 * (raw + self.last_raw_rate)
        } else {
            raw
        };
        self.last_distance = Some(distance);
        self.last_raw_rate = raw;
        RangeReading {
            distance,
            rate,
            group_id,
        }
    }

    pub fn reset(&mut self) {
        self.last_distance = None;
        self.last_raw_rate = 0.0;
    }
}

/// Vision-cone measurement of one obstacle group.
///
/// `alpha1 <= alpha2` in unwrapped order around the group's center bearing;
/// both are absolute bearings and the cone spans less than pi.
#[derive(Debug, Clone, Copy)]
pub struct VisionConeReading {
    pub distance: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Obstacle velocity estimate from differencing the group center.
    pub velocity: Vec2,
    pub group_id: usize,
}

/// Minimal absolute-bearing interval subtended by the group from `position`.
///
/// Per member: a disc subtends its center bearing plus/minus asin(R/D); a
/// convex polygon's extremal bearings occur at vertices; a capsule chain is
/// covered by the bearing hull of its end discs.
pub fn vision_cone(group: &ObstacleGroup, position: Vec2) -> Result<(f64, f64), SensingError> {
    if group.contains(position) {
        return Err(SensingError::InsideObstacle);
    }
    let reference = (group.distance_to_point(position).closest - position).angle();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut add = |bearing: f64| {
        // Unwrap relative to the reference so the interval never straddles the cut.
        let b = reference + wrap_angle(bearing - reference);
        lo = lo.min(b);
        hi = hi.max(b);
    };
    for m in &group.members {
        match &m.shape {
            Shape::Disc { center, radius } => {
                let delta = *center - position;
                let d = delta.norm();
                if d <= *radius {
                    return Err(SensingError::InsideObstacle);
                }
                let half = (radius / d).asin();
                let b = delta.angle();
                add(b - half);
                add(b + half);
            }
            Shape::ConvexPolygon { vertices } => {
                for v in vertices {
                    add((*v - position).angle());
                }
            }
            Shape::Chain { points, half_width } => {
                for p in points {
                    let delta = *p - position;
                    let d = delta.norm();
                    if d <= *half_width {
                        return Err(SensingError::InsideObstacle);
                    }
                    let half = (half_width / d).asin();
                    let b = delta.angle();
                    add(b - half);
                    add(b + half);
                }
            }
        }
    }
    Ok((lo, hi))
}

/// Stateful vision sensor: cones plus a finite-difference obstacle velocity
/// estimate from the motion of each group's enclosing-circle center.
#[derive(Debug, Clone, Default)]
pub struct VisionSensor {
    pub max_range: Option<f64>,
    last_centers: std::collections::HashMap<usize, (f64, Vec2)>,
}

impl VisionSensor {
    pub fn new(max_range: Option<f64>) -> Self {
        VisionSensor {
            max_range,
            last_centers: Default::default(),
        }
    }

    pub fn sense(
        &mut self,
        group: &ObstacleGroup,
        t: f64,
        pose: &Pose,
    ) -> Result<VisionConeReading, SensingError> {
        let p = pose.position();
        let q = group.distance_to_point(p);
        if q.penetrating {
            return Err(SensingError::InsideObstacle);
        }
        let (alpha1, alpha2) = vision_cone(group, p)?;
        let (center, _) = group.enclosing_circle();
        let id = group.id();
        let velocity = self.update_velocity(id, t, center);
        Ok(VisionConeReading {
            distance: q.distance,
            alpha1,
            alpha2,
            velocity,
            group_id: id,
        })
    }

    /// Cone and distance of the group's covering disc (its minimal enclosing
    /// circle). Non-disc obstacles are engaged through this abstraction by
    /// the constant-avoiding-angle controller.
    pub fn sense_covering_disc(
        &mut self,
        group: &ObstacleGroup,
        t: f64,
        pose: &Pose,
    ) -> Result<VisionConeReading, SensingError> {
        let p = pose.position();
        let (center, radius) = group.enclosing_circle();
        let delta = center - p;
        let dist_to_center = delta.norm();
        if dist_to_center <= radius {
            return Err(SensingError::InsideObstacle);
        }
        let half = (radius / dist_to_center).asin();
        let bearing = delta.angle();
        let id = group.id();
        let velocity = self.update_velocity(id, t, center);
        Ok(VisionConeReading {
            distance: dist_to_center - radius,
            alpha1: bearing - half,
            alpha2: bearing + half,
            velocity,
            group_id: id,
        })
    }

    fn update_velocity(&mut self, id: usize, t: f64, center: Vec2) -> Vec2 {
        let velocity = match self.last_centers.get(&id) {
            Some((t_prev, c_prev)) if t > *t_prev => (center - *c_prev) * (1.0 / (t - t_prev)),
            _ => Vec2::ZERO,
        };
        self.last_centers.insert(id, (t, center));
        velocity
    }

    pub fn reset(&mut self) {
        self.last_centers.clear();
    }
}

/// One binary sector scan: per grid bearing, whether the enlarged environment
/// intrudes into the look-ahead disc along that bearing.
#[derive(Debug, Clone)]
pub struct SectorScan {
    /// Robot heading at scan time.
    pub heading: f64,
    /// Look-ahead disc diameter.
    pub d_s: f64,
    /// Grid spacing (radians); must divide pi evenly.
    pub resolution: f64,
    /// Cell-centered bearing offsets from the heading, covering (-pi, pi).
    pub offsets: Vec<f64>,
    pub occupied: Vec<bool>,
}

impl SectorScan {
    /// Absolute bearing of grid cell `i`.
    pub fn bearing(&self, i: usize) -> f64 {
        self.heading + self.offsets[i]
    }

    pub fn all_free(&self) -> bool {
        self.occupied.iter().all(|m| !m)
    }
}

/// Is the look-ahead disc invaded along `bearing` (absolute)?
///
/// True iff the nearest hit of the d_safe-enlarged environment along the ray
/// is within the chord D_s cos(offset), offset measured from the heading.
/// The chord degenerates for |offset| >= pi/2, where the result is false.
pub fn bearing_occupied(env: &Environment, t: f64, pose: &Pose, d_s: f64, bearing: f64) -> bool {
    let offset = wrap_angle(bearing - pose.theta);
    if offset.abs() >= FRAC_PI_2 {
        return false;
    }
    let chord = d_s * offset.cos();
    let dir = Vec2::from_angle(bearing);
    let origin = pose.position();
    for placed in env.occupied_at(t) {
        if let Some(s) = placed.shape.ray_hit(origin, dir, env.d_safe) {
            if s <= chord {
                return true;
            }
        }
    }
    false
}

/// Sample the binary sector function on a cell-centered grid over (-pi, pi).
pub fn sense_sectors(
    env: &Environment,
    t: f64,
    pose: &Pose,
    d_s: f64,
    resolution: f64,
) -> SectorScan {
    assert!(
        d_s > 0.0,
        "sector scan needs a positive look-ahead diameter"
    );
    let cells_per_half = PI / resolution;
    assert!(
        (cells_per_half - cells_per_half.round()).abs() < 1e-9,
        "sector resolution must divide pi evenly"
    );
    let n = 2 * cells_per_half.round() as usize;
    let mut offsets = Vec::with_capacity(n);
    let mut occupied = Vec::with_capacity(n);
    for k in 0..n {
        let offset = -PI + (k as f64 + 0.5) * resolution;
        let m = if offset.abs() < FRAC_PI_2 {
            bearing_occupied(env, t, pose, d_s, pose.theta + offset)
        } else {
            false
        };
        offsets.push(offset);
        occupied.push(m);
    }
    SectorScan {
        heading: pose.theta,
        d_s,
        resolution,
        offsets,
        occupied,
    }
}

/// Absolute direction and distance from the robot to the target.
#[derive(Debug, Clone, Copy)]
pub struct TargetBearing {
    pub bearing: f64,
    pub distance: f64,
}

/// Heading-to-target. Exactly at the target the bearing degenerates to the
/// current heading (terminal state).
pub fn sense_target(pose: &Pose, target: Vec2) -> TargetBearing {
    let delta = target - pose.position();
    let distance = delta.norm();
    if distance == 0.0 {
        return TargetBearing {
            bearing: pose.theta,
            distance: 0.0,
        };
    }
    TargetBearing {
        bearing: delta.angle(),
        distance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{MotionLaw, Obstacle};
    use approx::assert_abs_diff_eq;

    fn disc_env(x: f64, y: f64, r: f64, d_safe: f64) -> Environment {
        Environment::new(
            vec![Obstacle {
                id: 0,
                shape: Shape::Disc {
                    center: Vec2::new(x, y),
                    radius: r,
                },
                motion: MotionLaw::Static,
            }],
            1.0,
            d_safe,
        )
    }

    #[test]
    fn range_rate_head_on() {
        let env = Environment::new(
            vec![Obstacle {
                id: 0,
                shape: Shape::Disc {
                    center: Vec2::new(10.0, 0.0),
                    radius: 1.0,
                },
                motion: MotionLaw::ConstantVelocity {
                    velocity: Vec2::new(-1.0, 0.0),
                },
            }],
            1.0,
            0.5,
        );
        let pose = Pose::new(0.0, 0.0, 0.0);
        let mut sensor = RangeSensor::new(0.1, false, None);
        let first = sensor.sense(&env, 0.0, &pose);
        assert_eq!(first.rate, 0.0, "first sample rate is zero by convention");
        let second = sensor.sense(&env, 0.1, &pose);
        assert_abs_diff_eq!(second.rate, -1.0, epsilon = 1e-6);

        // Everything static: rate stays zero.
        let env = disc_env(5.0, 0.0, 1.0, 0.5);
        let mut sensor = RangeSensor::new(0.1, false, None);
        sensor.sense(&env, 0.0, &pose);
        let r = sensor.sense(&env, 0.1, &pose);
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn range_cap_reports_no_obstacle() {
        let env = disc_env(10.0, 0.0, 1.0, 0.5);
        let mut sensor = RangeSensor::new(0.1, false, Some(4.0));
        let r = sensor.sense(&env, 0.0, &Pose::new(0.0, 0.0, 0.0));
        assert_eq!(r.group_id, None);
        assert_eq!(r.distance, 4.0);
    }

    #[test]
    fn cone_of_disc_matches_arcsin() {
        let env = disc_env(5.0, 0.0, 1.0, 0.5);
        let groups = env.interpolate_clusters(0.0);
        let (a1, a2) = vision_cone(&groups[0], Vec2::ZERO).unwrap();
        assert_abs_diff_eq!(a1, -0.201_357_920_8, epsilon = 1e-9);
        assert_abs_diff_eq!(a2, 0.201_357_920_8, epsilon = 1e-9);

        // Same disc rotated onto the y-axis.
        let env = disc_env(0.0, 5.0, 1.0, 0.5);
        let groups = env.interpolate_clusters(0.0);
        let (a1, a2) = vision_cone(&groups[0], Vec2::ZERO).unwrap();
        assert_abs_diff_eq!((a1 + a2) / 2.0, PI / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a2 - a1, 2.0 * 0.201_357_920_8, epsilon = 1e-9);
    }

    /// Boundary-sampling oracle: bearings of many boundary points.
    fn cone_oracle(group: &ObstacleGroup, position: Vec2, samples: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let reference = (group.distance_to_point(position).closest - position).angle();
        for m in &group.members {
            for p in m.shape.boundary_samples(samples) {
                let b = reference + wrap_angle((p - position).angle() - reference);
                lo = lo.min(b);
                hi = hi.max(b);
            }
        }
        (lo, hi)
    }

    #[test]
    fn cone_agrees_with_boundary_sampling_oracle() {
        let env = disc_env(5.0, 2.0, 1.3, 0.5);
        let groups = env.interpolate_clusters(0.0);
        let exact = vision_cone(&groups[0], Vec2::ZERO).unwrap();
        let sampled = cone_oracle(&groups[0], Vec2::ZERO, 10_000);
        assert_abs_diff_eq!(exact.0, sampled.0, epsilon = 1e-3);
        assert_abs_diff_eq!(exact.1, sampled.1, epsilon = 1e-3);
    }

    #[test]
    fn cone_of_polygon_is_vertex_extremes() {
        let vertices = vec![
            Vec2::new(3.0, -1.0),
            Vec2::new(5.0, -1.0),
            Vec2::new(5.0, 1.5),
            Vec2::new(3.0, 1.5),
        ];
        let env = Environment::new(
            vec![Obstacle {
                id: 0,
                shape: Shape::ConvexPolygon {
                    vertices: vertices.clone(),
                },
                motion: MotionLaw::Static,
            }],
            1.0,
            0.5,
        );
        let groups = env.interpolate_clusters(0.0);
        let (a1, a2) = vision_cone(&groups[0], Vec2::ZERO).unwrap();
        let bearings: Vec<f64> = vertices.iter().map(|v| v.angle()).collect();
        let lo = bearings.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = bearings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(a1, lo, epsilon = 1e-12);
        assert_abs_diff_eq!(a2, hi, epsilon = 1e-12);
    }

    #[test]
    fn inside_group_is_an_error() {
        let env = disc_env(0.0, 0.0, 2.0, 0.5);
        let groups = env.interpolate_clusters(0.0);
        assert!(vision_cone(&groups[0], Vec2::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn sector_examples() {
        let pose = Pose::new(0.0, 0.0, 0.0);
        // Near-point obstacle dead ahead at 2 m, look-ahead diameter 4.
        let env = disc_env(2.0, 0.0, 1e-9, 0.0);
        assert!(bearing_occupied(&env, 0.0, &pose, 4.0, 0.0));
        // At offset pi/2 the chord is zero.
        let env = disc_env(0.0, 1.0, 1e-9, 0.0);
        assert!(!bearing_occupied(&env, 0.0, &pose, 4.0, FRAC_PI_2));
        // Point at (1.99, 1.99): inside the disc by membership, hit by the ray test.
        let env = disc_env(1.99, 1.99, 1e-9, 0.0);
        let b = Vec2::new(1.99, 1.99).angle();
        assert!(bearing_occupied(&env, 0.0, &pose, 4.0, b));
    }

    #[test]
    fn scan_rear_half_is_free() {
        let env = disc_env(-3.0, 0.0, 1.0, 0.5);
        let scan = sense_sectors(&env, 0.0, &Pose::new(0.0, 0.0, 0.0), 8.0, PI / 180.0);
        for (o, m) in scan.offsets.iter().zip(&scan.occupied) {
            if o.abs() >= FRAC_PI_2 {
                assert!(!m);
            }
        }
        assert!(scan.all_free(), "obstacle behind the robot is not sensed");
    }

    #[test]
    fn scan_monotone_in_ds() {
        let env = disc_env(3.0, 1.0, 0.8, 0.3);
        let pose = Pose::new(0.0, 0.0, 0.2);
        let small = sense_sectors(&env, 0.0, &pose, 4.0, PI / 360.0);
        let large = sense_sectors(&env, 0.0, &pose, 6.0, PI / 360.0);
        for i in 0..small.occupied.len() {
            if small.occupied[i] {
                assert!(large.occupied[i], "enlarging D_s must never free a bearing");
            }
        }
    }

    #[test]
    fn target_bearings() {
        let pose = Pose::new(0.0, 0.0, 0.7);
        assert_eq!(sense_target(&pose, Vec2::new(1.0, 0.0)).bearing, 0.0);
        assert_abs_diff_eq!(sense_target(&pose, Vec2::new(0.0, 1.0)).bearing, PI / 2.0);
        assert_eq!(sense_target(&pose, Vec2::new(-1.0, 0.0)).bearing, PI);
        let at = sense_target(&pose, Vec2::ZERO);
        assert_eq!(at.distance, 0.0);
        assert_eq!(at.bearing, 0.7);
    }

    #[test]
    fn vision_velocity_estimate_tracks_translation() {
        let env = Environment::new(
            vec![Obstacle {
                id: 0,
                shape: Shape::Disc {
                    center: Vec2::new(6.0, 0.0),
                    radius: 1.0,
                },
                motion: MotionLaw::ConstantVelocity {
                    velocity: Vec2::new(-0.4, 0.2),
                },
            }],
            1.0,
            0.5,
        );
        let pose = Pose::new(0.0, 0.0, 0.0);
        let mut sensor = VisionSensor::new(None);
        let g0 = env.interpolate_clusters(0.0);
        sensor.sense(&g0[0], 0.0, &pose).unwrap();
        let g1 = env.interpolate_clusters(0.1);
        let r = sensor.sense(&g1[0], 0.1, &pose).unwrap();
        assert_abs_diff_eq!(r.velocity.x, -0.4, epsilon = 1e-3);
        assert_abs_diff_eq!(r.velocity.y, 0.2, epsilon = 1e-3);
    }
}
