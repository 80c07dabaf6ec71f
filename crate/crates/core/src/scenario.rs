//! Scenario files: a TOML document with `[sim]`, `[world]`, `[robot]`,
//! `[target]`, `[formation]` and `[batch]` sections. Unknown keys are
//! rejected; units are meters, seconds and radians throughout.

use serde::Deserialize;
use std::path::Path;

use crate::bina::BinaParams;
use crate::ena::EnaParams;
use crate::error::ScenarioError;
use crate::formation::{FormationConfig, GraphSchedule};
use crate::math::{Pose, RobotLimits, Vec2};
use crate::naier::NaierParams;
use crate::sim::{BatchSpec, ControllerKind, FormationScenario, RobotSpec, Scenario};
use crate::world::{Environment, MotionLaw, Obstacle, Shape};

/// Parameter presets of the measured wheelchair platform.
pub mod presets {
    use std::f64::consts::PI;

    /// Wheelchair sampling interval (s).
    pub const WHEELCHAIR_CONTROL_PERIOD: f64 = 0.1;
    /// Half axle length L (m); the axle is 0.55 m.
    pub const WHEELCHAIR_AXLE_HALF_LENGTH: f64 = 0.275;
    /// Driving wheel radius (m); the wheel diameter is 0.35 m.
    pub const WHEELCHAIR_WHEEL_RADIUS: f64 = 0.175;
    pub const WHEELCHAIR_V_MAX: f64 = 0.9;
    pub const WHEELCHAIR_U_MAX: f64 = PI / 4.0;
    pub const WHEELCHAIR_AVOIDING_ANGLE: f64 = PI / 3.5;
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    label: Option<String>,
    #[serde(default)]
    sim: RawSim,
    world: Option<RawWorld>,
    robot: Option<RawRobot>,
    target: Option<RawTarget>,
    formation: Option<RawFormation>,
    batch: Option<BatchSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    duration: Option<f64>,
    ts: Option<f64>,
    substeps: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorld {
    #[serde(default = "default_d_safe")]
    d_safe: f64,
    #[serde(default = "default_gap")]
    interpolation_gap: f64,
    #[serde(default)]
    obstacles: Vec<RawObstacle>,
}

fn default_d_safe() -> f64 {
    0.5
}

fn default_gap() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    shape: Shape,
    #[serde(default = "default_motion")]
    motion: MotionLaw,
}

fn default_motion() -> MotionLaw {
    MotionLaw::Static
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobot {
    pose: Pose,
    #[serde(default)]
    v_min: f64,
    v_max: f64,
    u_max: f64,
    controller: String,
    sensing_range: Option<f64>,
    bina: Option<RawBina>,
    ena: Option<RawEna>,
    naier: Option<RawNaier>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBina {
    avoiding_angle: f64,
    trigger: f64,
    /// Obstacle speed bound V; defaults to the worlds's actual bound.
    obstacle_speed_bound: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEna {
    #[serde(default = "default_gain")]
    gain: f64,
    #[serde(default = "default_saturation")]
    saturation_width: f64,
    standoff: f64,
    trigger: f64,
    #[serde(default = "default_mismatch")]
    exit_mismatch: f64,
}

fn default_gain() -> f64 {
    1.0
}

fn default_saturation() -> f64 {
    0.3
}

fn default_mismatch() -> f64 {
    0.1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNaier {
    /// Look-ahead diameter; defaults to the 2-second collision horizon 2*V*t0.
    disc_diameter: Option<f64>,
    #[serde(default = "default_decision_period")]
    decision_period: f64,
    /// Grid spacing in degrees (0.25 deg = 720 rays over the forward half-plane).
    #[serde(default = "default_resolution_deg")]
    resolution_deg: f64,
    /// Fixed desired direction; absent selects the target-reaching variant.
    desired_direction: Option<f64>,
    environment_speed: Option<f64>,
}

fn default_decision_period() -> f64 {
    0.1
}

fn default_resolution_deg() -> f64 {
    0.25
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    position: Vec2,
    #[serde(default = "default_capture")]
    capture_radius: f64,
}

fn default_capture() -> f64 {
    0.1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFormation {
    slots: Vec<Vec2>,
    /// Fictitious-target lead; defaults to 1.1 times the feasibility bound.
    lead: Option<f64>,
    detection_range: f64,
    /// Vacancy radius; defaults to detection_range / 10.
    epsilon: Option<f64>,
    #[serde(default = "default_rounds")]
    periods_per_round: usize,
    #[serde(default)]
    anonymous: bool,
    #[serde(default = "default_graph")]
    graph: GraphSchedule,
    /// Explicit initial conditions [x, y, theta, v] per robot.
    #[serde(default)]
    initial: Vec<[f64; 4]>,
    #[serde(default)]
    initial_assignment: Vec<usize>,
    #[serde(default = "default_spawn")]
    spawn_half_extent: f64,
}

fn default_rounds() -> usize {
    20
}

fn default_graph() -> GraphSchedule {
    GraphSchedule::Complete
}

fn default_spawn() -> f64 {
    8.0
}

/// Everything a scenario file can describe.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub label: String,
    pub nav: Option<Scenario>,
    pub formation: Option<FormationScenario>,
    pub batch: Option<BatchSpec>,
}

pub fn load_path(path: &Path) -> Result<Loaded, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    load_str(&text, label.as_deref())
}

/// Parse and assemble a scenario document. TOML errors carry line/column
/// positions in their message.
pub fn load_str(text: &str, fallback_label: Option<&str>) -> Result<Loaded, ScenarioError> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let label = file
        .label
        .clone()
        .or_else(|| fallback_label.map(str::to_owned))
        .unwrap_or_else(|| "scenario".into());

    let environment = match &file.world {
        Some(w) => {
            let obstacles = w
                .obstacles
                .iter()
                .enumerate()
                .map(|(id, o)| Obstacle {
                    id,
                    shape: o.shape.clone(),
                    motion: o.motion.clone(),
                })
                .collect();
            Environment::new(obstacles, w.interpolation_gap, w.d_safe)
        }
        None => Environment::new(vec![], default_gap(), default_d_safe()),
    };
    validate_environment(&environment)?;

    let ts = file.sim.ts.unwrap_or(0.1);
    if ts <= 0.0 {
        return Err(ScenarioError::Invalid("sim.ts must be positive".into()));
    }
    let substeps = file.sim.substeps.unwrap_or(4).max(1);
    let seed = file.sim.seed.unwrap_or(0);

    let mut nav = None;
    if let Some(robot) = &file.robot {
        let target = file.target.as_ref().ok_or_else(|| {
            ScenarioError::Invalid("[robot] present but [target] section missing".into())
        })?;
        let limits = RobotLimits::new(robot.v_min, robot.v_max, robot.u_max)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let controller = parse_controller(&robot.controller)?;
        let spec = assemble_robot(robot, limits, controller, &environment, ts)?;
        let straight_line = spec.pose.position().distance(target.position) / limits.v_max.max(1e-9);
        let duration = file.sim.duration.unwrap_or(10.0 * straight_line.max(2.0));
        nav = Some(Scenario {
            label: label.clone(),
            environment: environment.clone(),
            robot: spec,
            target: target.position,
            capture_radius: target.capture_radius,
            duration,
            control_period: ts,
            substeps,
            seed,
        });
    }

    let mut formation = None;
    if let Some(raw) = &file.formation {
        let robot = file.robot.as_ref().ok_or_else(|| {
            ScenarioError::Invalid("[formation] requires a [robot] section for the limits".into())
        })?;
        let limits = RobotLimits::new(robot.v_min, robot.v_max, robot.u_max)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        if limits.v_min <= 0.0 {
            return Err(ScenarioError::Invalid(
                "formation robots need a positive v_min (they cannot stop)".into(),
            ));
        }
        let lead_bound = 2.0 * limits.v_max / limits.u_max;
        let config = FormationConfig {
            slots: raw.slots.clone(),
            lead: raw.lead.unwrap_or(1.1 * lead_bound),
            detection_range: raw.detection_range,
            epsilon: raw.epsilon.unwrap_or(raw.detection_range / 10.0),
            periods_per_round: raw.periods_per_round.max(1),
        };
        if config.lead <= lead_bound {
            return Err(ScenarioError::Invalid(format!(
                "formation lead {} must exceed 2*v_max/u_max = {}",
                config.lead, lead_bound
            )));
        }
        if !(config.epsilon > 0.0 && config.epsilon < config.detection_range / 2.0) {
            return Err(ScenarioError::Invalid(
                "formation epsilon must lie in (0, detection_range/2)".into(),
            ));
        }
        let mut initial = Vec::with_capacity(raw.initial.len());
        for [x, y, th, v] in &raw.initial {
            if ![*x, *y, *th, *v].iter().all(|c| c.is_finite()) {
                return Err(ScenarioError::Invalid(
                    "formation initial conditions must be finite".into(),
                ));
            }
            initial.push((Pose::new(*x, *y, *th), *v));
        }
        if raw.initial_assignment.iter().any(|&a| a >= raw.slots.len()) {
            return Err(ScenarioError::Invalid(
                "initial_assignment indices must address existing slots".into(),
            ));
        }
        formation = Some(FormationScenario {
            config,
            limits,
            schedule: raw.graph.clone(),
            anonymous: raw.anonymous,
            duration: file.sim.duration.unwrap_or(180.0),
            control_period: file.sim.ts.unwrap_or(0.02),
            seed,
            initial,
            initial_assignment: raw.initial_assignment.clone(),
            spawn_half_extent: raw.spawn_half_extent,
        });
    }

    if let Some(batch) = &file.batch {
        validate_batch(batch)?;
    }

    if nav.is_none() && formation.is_none() {
        return Err(ScenarioError::Invalid(
            "scenario describes neither a [robot]+[target] run nor a [formation]".into(),
        ));
    }

    Ok(Loaded {
        label,
        nav,
        formation,
        batch: file.batch.clone(),
    })
}

fn validate_batch(batch: &BatchSpec) -> Result<(), ScenarioError> {
    let ranges_ok = batch.radius_range[0] > 0.0
        && batch.radius_range[0] <= batch.radius_range[1]
        && batch.speed_range[0] >= 0.0
        && batch.speed_range[0] <= batch.speed_range[1]
        && batch.obstacle_count[0] <= batch.obstacle_count[1]
        && batch.clear_radius >= 0.0
        && batch.spawn_region[0] <= batch.spawn_region[2]
        && batch.spawn_region[1] <= batch.spawn_region[3];
    let finite = batch
        .radius_range
        .iter()
        .chain(&batch.speed_range)
        .chain(&batch.spawn_region)
        .chain(std::iter::once(&batch.clear_radius))
        .all(|v| v.is_finite());
    if !(ranges_ok && finite && batch.runs > 0) {
        return Err(ScenarioError::Invalid(
            "batch ranges must be finite, ordered and non-degenerate".into(),
        ));
    }
    Ok(())
}

fn parse_controller(name: &str) -> Result<ControllerKind, ScenarioError> {
    match name {
        "pursuit" => Ok(ControllerKind::Pursuit),
        "bina" => Ok(ControllerKind::Bina),
        "ena" => Ok(ControllerKind::Ena),
        "naier" => Ok(ControllerKind::Naier),
        // `all` runs via the compare command; default the single-run law to pursuit.
        "all" => Ok(ControllerKind::Pursuit),
        other => Err(ScenarioError::Invalid(format!(
            "unknown controller {other:?} (expected pursuit|bina|ena|naier|all)"
        ))),
    }
}

fn assemble_robot(
    raw: &RawRobot,
    limits: RobotLimits,
    controller: ControllerKind,
    env: &Environment,
    ts: f64,
) -> Result<RobotSpec, ScenarioError> {
    let env_speed = env.max_obstacle_speed();
    let bina = raw
        .bina
        .as_ref()
        .map(|b| {
            let params = BinaParams {
                avoiding_angle: b.avoiding_angle,
                trigger_distance: b.trigger,
                d_safe: env.d_safe,
                obstacle_speed_bound: b.obstacle_speed_bound.unwrap_or(env_speed),
                limits,
            };
            params
                .validate()
                .map_err(ScenarioError::Invalid)
                .map(|()| params)
        })
        .transpose()?;
    let ena = raw
        .ena
        .as_ref()
        .map(|e| {
            let params = EnaParams {
                gain: e.gain,
                saturation_width: e.saturation_width,
                standoff: e.standoff,
                trigger_distance: e.trigger,
                exit_mismatch: e.exit_mismatch,
                d_safe: env.d_safe,
                limits,
            };
            params
                .validate()
                .map_err(ScenarioError::Invalid)
                .map(|()| params)
        })
        .transpose()?;
    let naier = raw
        .naier
        .as_ref()
        .map(|n| {
            let params = NaierParams {
                desired_direction: n.desired_direction.unwrap_or(0.0),
                disc_diameter: n.disc_diameter.unwrap_or(2.0 * limits.v_max * 2.0),
                d_safe: env.d_safe,
                decision_period: n.decision_period.max(ts),
                resolution: n.resolution_deg.to_radians(),
                environment_speed: n.environment_speed.unwrap_or(env_speed),
                limits,
            };
            params
                .validate()
                .map_err(ScenarioError::Invalid)
                .map(|()| params)
        })
        .transpose()?;
    let naier_target_reaching = raw
        .naier
        .as_ref()
        .map_or(true, |n| n.desired_direction.is_none());
    Ok(RobotSpec {
        pose: raw.pose,
        limits,
        controller,
        bina,
        ena,
        naier,
        naier_target_reaching,
        sensing_range: raw.sensing_range,
    })
}

fn validate_environment(env: &Environment) -> Result<(), ScenarioError> {
    if !env.d_safe.is_finite() || !env.interpolation_gap.is_finite() {
        return Err(ScenarioError::Invalid(
            "world parameters must be finite".into(),
        ));
    }
    if env.d_safe <= 0.0 {
        return Err(ScenarioError::Invalid(
            "world.d_safe must be positive".into(),
        ));
    }
    if env.interpolation_gap < 0.0 {
        return Err(ScenarioError::Invalid(
            "interpolation_gap must be non-negative".into(),
        ));
    }
    for o in &env.obstacles {
        match &o.shape {
            Shape::Disc { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(ScenarioError::Invalid(format!(
                        "obstacle {}: disc radius must be positive",
                        o.id
                    )));
                }
            }
            Shape::ConvexPolygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(ScenarioError::Invalid(format!(
                        "obstacle {}: polygon needs at least 3 vertices",
                        o.id
                    )));
                }
                if !is_convex_ccw(vertices) {
                    return Err(ScenarioError::Invalid(format!(
                        "obstacle {}: polygon must be convex with CCW vertex order",
                        o.id
                    )));
                }
            }
            Shape::Chain { points, half_width } => {
                if points.len() < 2 {
                    return Err(ScenarioError::Invalid(format!(
                        "obstacle {}: chain needs at least 2 points",
                        o.id
                    )));
                }
                if *half_width <= 0.0 {
                    return Err(ScenarioError::Invalid(format!(
                        "obstacle {}: chain half_width must be positive",
                        o.id
                    )));
                }
            }
        }
    }
    Ok(())
}

fn is_convex_ccw(vertices: &[Vec2]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        if (b - a).cross(c - b) < -1e-12 {
            return false;
        }
    }
    true
}
