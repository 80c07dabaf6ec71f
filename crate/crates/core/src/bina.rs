//! Vision-cone obstacle avoidance with a constant avoiding angle.
//!
//! The avoidance law enlarges the measured vision cone by the avoiding angle,
//! builds the two occlusion vectors on the enlarged boundaries, and steers the
//! robot's velocity onto the vector (obstacle velocity + nearer occlusion
//! vector). Against a rigid obstacle this locks a constant angle between the
//! heading and the cone boundary, so the robot negotiates the obstacle along a
//! constant-curvature orbit. Pursuit mode drives straight at the target at
//! full speed; the two modes switch on distance triggers.

use serde::{Deserialize, Serialize};

use crate::math::{turn_sign, wrap_angle, ControlInput, RobotLimits, Vec2};
use crate::report::{CheckItem, ValidationReport};
use crate::sensing::VisionConeReading;
use crate::world::{Environment, Shape};

/// Heading mismatch below which the robot counts as oriented at a bearing.
pub const ALIGNMENT_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BinaParams {
    /// Avoiding angle alpha_0, in (0, pi/2).
    pub avoiding_angle: f64,
    /// Avoidance trigger distance C.
    pub trigger_distance: f64,
    pub d_safe: f64,
    /// Upper bound V on obstacle speeds, strictly below the robot's v_max.
    pub obstacle_speed_bound: f64,
    pub limits: RobotLimits,
}

impl BinaParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.avoiding_angle > 0.0 && self.avoiding_angle < std::f64::consts::FRAC_PI_2) {
            return Err(format!(
                "avoiding angle {} outside (0, pi/2)",
                self.avoiding_angle
            ));
        }
        if self.trigger_distance <= 0.0 || self.d_safe <= 0.0 {
            return Err("trigger distance and d_safe must be positive".into());
        }
        if self.obstacle_speed_bound >= self.limits.v_max {
            return Err("obstacle speed bound must be below v_max".into());
        }
        Ok(())
    }

    /// Standoff constant a_i = R_i / cos(alpha_0) - R_i for a covering radius R_i.
    pub fn standoff(&self, covering_radius: f64) -> f64 {
        covering_radius / self.avoiding_angle.cos() - covering_radius
    }
}

/// Controller mode. Avoidance is entered on a downward crossing of the
/// trigger distance and left once the robot has settled near the obstacle
/// and points at the target again.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinaMode {
    Pursuit,
    Avoid { group_id: usize, entered_at: f64 },
}

/// Boundaries of the enlarged vision cone, both wrapped.
pub fn enlarge_cone(reading: &VisionConeReading, avoiding_angle: f64) -> (f64, f64) {
    (
        wrap_angle(reading.alpha1 - avoiding_angle),
        wrap_angle(reading.alpha2 + avoiding_angle),
    )
}

/// Occlusion vectors along the enlarged cone boundaries, each of norm
/// v_max - V.
pub fn occlusion_vectors(beta1: f64, beta2: f64, v_max: f64, v_bound: f64) -> (Vec2, Vec2) {
    let scale = v_max - v_bound;
    (
        Vec2::from_angle(beta1) * scale,
        Vec2::from_angle(beta2) * scale,
    )
}

/// Index (1 or 2) of the candidate v_obs + l_j making the smallest angle with
/// the robot's velocity direction; exact ties pick 1.
pub fn select_boundary(l1: Vec2, l2: Vec2, v_obs: Vec2, v_robot: Vec2) -> u8 {
    let angle_to = |candidate: Vec2| {
        let c = v_obs + candidate;
        if c.norm_squared() == 0.0 {
            return std::f64::consts::PI;
        }
        crate::math::ccw_angle_from_to(c, v_robot).abs()
    };
    if angle_to(l2) < angle_to(l1) {
        2
    } else {
        1
    }
}

/// The avoidance law: speed |v_obs + l_h|, max-rate turn of the velocity
/// direction toward v_obs + l_h (zero once aligned).
pub fn avoid_control(
    reading: &VisionConeReading,
    params: &BinaParams,
    heading: Vec2,
) -> ControlInput {
    let (b1, b2) = enlarge_cone(reading, params.avoiding_angle);
    let (l1, l2) = occlusion_vectors(b1, b2, params.limits.v_max, params.obstacle_speed_bound);
    let h = select_boundary(l1, l2, reading.velocity, heading);
    let chosen = reading.velocity + if h == 1 { l1 } else { l2 };
    let u = if chosen.norm_squared() == 0.0 {
        0.0
    } else {
        params.limits.u_max * f64::from(turn_sign(heading, chosen))
    };
    params.limits.clamp(ControlInput::new(chosen.norm(), u))
}

/// The enlarged-cone boundary currently steered along, for metric logging.
pub fn chosen_boundary(reading: &VisionConeReading, params: &BinaParams, heading: Vec2) -> f64 {
    let (b1, b2) = enlarge_cone(reading, params.avoiding_angle);
    let (l1, l2) = occlusion_vectors(b1, b2, params.limits.v_max, params.obstacle_speed_bound);
    if select_boundary(l1, l2, reading.velocity, heading) == 1 {
        b1
    } else {
        b2
    }
}

/// Target pursuit: full speed, steering at the angular bound until the heading
/// matches the target bearing, then straight.
pub fn pursuit_control(limits: &RobotLimits, target_bearing: f64, theta: f64) -> ControlInput {
    let err = wrap_angle(target_bearing - theta);
    let u = if err.abs() <= ALIGNMENT_TOLERANCE {
        0.0
    } else {
        limits.u_max * err.signum()
    };
    ControlInput::new(limits.v_max, u)
}

/// Did the heading pass through the target bearing during the last period?
///
/// Sampled control never observes exact equality; the orientation event is the
/// sampled error being inside the tolerance, or a sign change of the wrapped
/// error between consecutive ticks (small enough to exclude the +-pi cut).
pub fn alignment_event(prev_err: f64, err: f64) -> bool {
    if err.abs() <= ALIGNMENT_TOLERANCE {
        return true;
    }
    prev_err.is_finite()
        && prev_err != 0.0
        && err.signum() != prev_err.signum()
        && (err - prev_err).abs() <= std::f64::consts::FRAC_PI_2
}

/// Mode switching: enter avoidance when the nearest-group distance crosses
/// below the trigger from above (or dips under the close-range re-arm floor);
/// leave once d <= 1.1 a_i and the robot points at the target (see
/// [`alignment_event`]).
#[allow(clippy::too_many_arguments)]
pub fn switch_mode(
    mode: BinaMode,
    group_id: usize,
    d: f64,
    d_prev: f64,
    aligned: bool,
    params: &BinaParams,
    standoff: f64,
    t: f64,
) -> BinaMode {
    match mode {
        BinaMode::Pursuit => {
            let crossed = d <= params.trigger_distance && d_prev > params.trigger_distance;
            if crossed || d <= 0.8 * standoff {
                BinaMode::Avoid {
                    group_id,
                    entered_at: t,
                }
            } else {
                BinaMode::Pursuit
            }
        }
        BinaMode::Avoid { .. } => {
            // Disengage when the obstacle has moved back out of the trigger
            // zone (a departing obstacle would otherwise be followed forever).
            if d >= params.trigger_distance || (d <= 1.1 * standoff && aligned) {
                BinaMode::Pursuit
            } else {
                mode
            }
        }
    }
}

/// F_i: the angular rate demanded by orbiting a disc of radius `r` at
/// clearance d_safe against closing speed V_i + v_max.
pub fn turn_rate_demand(obstacle_speed: f64, v_max: f64, r: f64, d_safe: f64) -> f64 {
    let rd = r + d_safe;
    (obstacle_speed + v_max) * r / (rd * rd * (1.0 - (r * r) / (rd * rd)).sqrt())
}

/// Check the avoidance-feasibility inequalities for every obstacle of the
/// environment over `[0, duration]`, with per-inequality margins.
pub fn validate_assumptions(
    env: &Environment,
    params: &BinaParams,
    target: Vec2,
    duration: f64,
) -> ValidationReport {
    let mut report = ValidationReport::new("bina");
    let v_max = params.limits.v_max;
    let u_max = params.limits.u_max;
    let dt = 0.1;
    let steps = (duration / dt).ceil() as usize;

    let covering: Vec<(usize, f64, f64)> = env
        .obstacles
        .iter()
        .map(|o| {
            let (_, radius) = crate::geometry::min_enclosing_circle(&o.shape.boundary_samples(256));
            (o.id, radius, o.max_speed())
        })
        .collect();

    for o in &env.obstacles {
        if !matches!(o.shape, Shape::Disc { .. }) {
            report.notes.push(format!(
                "obstacle {}: not a disc; coverage is best-effort via its minimal enclosing circle",
                o.id
            ));
        }
        if !matches!(
            o.motion,
            crate::world::MotionLaw::Static | crate::world::MotionLaw::ConstantVelocity { .. }
        ) {
            report
                .notes
                .push(format!("obstacle {}: velocity is not constant", o.id));
        }
    }
    for i in 0..env.obstacles.len() {
        for j in (i + 1)..env.obstacles.len() {
            use crate::world::MotionLaw::ConstantVelocity;
            if let (ConstantVelocity { velocity: vi }, ConstantVelocity { velocity: vj }) =
                (&env.obstacles[i].motion, &env.obstacles[j].motion)
            {
                if vi.norm() > 0.0 && vj.norm() > 0.0 && vi.cross(*vj).abs() < 1e-12 {
                    report.notes.push(format!(
                        "obstacles {} and {}: collinear velocities",
                        env.obstacles[i].id, env.obstacles[j].id
                    ));
                }
            }
        }
    }

    for &(id, radius, speed) in &covering {
        let f_i = turn_rate_demand(speed, v_max, radius, params.d_safe);
        let a_i = params.standoff(radius);
        report.items.push(CheckItem::new(
            format!("obstacle {id}: u_max > F_i ({f_i:.4})"),
            u_max > f_i,
            u_max - f_i,
        ));
        if u_max > f_i {
            let bound = std::f64::consts::PI * v_max / (u_max - f_i) + 1.1 * a_i;
            report.items.push(CheckItem::new(
                format!("obstacle {id}: trigger C >= pi*v_max/(u_max-F_i) + 1.1*a_i"),
                params.trigger_distance >= bound,
                params.trigger_distance - bound,
            ));
        } else {
            report.items.push(CheckItem::new(
                format!("obstacle {id}: trigger bound undefined (u_max <= F_i)"),
                false,
                f64::NEG_INFINITY,
            ));
        }
        let alpha_bound = (radius / (radius + params.d_safe)).acos();
        report.items.push(CheckItem::new(
            format!("obstacle {id}: alpha_0 >= arccos(R/(R+d_safe))"),
            params.avoiding_angle >= alpha_bound,
            params.avoiding_angle - alpha_bound,
        ));
        let mut min_target_dist = f64::INFINITY;
        let ob = env.obstacles.iter().find(|o| o.id == id).unwrap();
        for k in 0..=steps {
            let d = ob
                .placed_at(k as f64 * dt)
                .distance_to_point(target)
                .distance;
            min_target_dist = min_target_dist.min(d);
        }
        report.items.push(CheckItem::new(
            format!("obstacle {id}: target clearance >= 1.1*a_i"),
            min_target_dist >= 1.1 * a_i,
            min_target_dist - 1.1 * a_i,
        ));
    }

    for i in 0..env.obstacles.len() {
        for j in (i + 1)..env.obstacles.len() {
            let (id_i, radius_i, speed_i) = covering[i];
            let id_j = covering[j].0;
            let f_i = turn_rate_demand(speed_i, v_max, radius_i, params.d_safe);
            if u_max <= f_i {
                continue;
            }
            let bound =
                2.0 * params.trigger_distance + std::f64::consts::PI * v_max / (u_max - f_i);
            let mut min_dist = f64::INFINITY;
            for k in 0..=steps {
                let t = k as f64 * dt;
                let d = env.obstacles[i]
                    .placed_at(t)
                    .distance_to_shape(&env.obstacles[j].placed_at(t));
                min_dist = min_dist.min(d);
            }
            report.items.push(CheckItem::new(
                format!("obstacles {id_i}/{id_j}: spacing >= 2C + pi*v_max/(u_max-F_i)"),
                min_dist >= bound,
                min_dist - bound,
            ));
        }
    }
    report
}
