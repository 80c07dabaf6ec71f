//! Time-stepped scenario execution: the control loop at the sampling period,
//! per-tick logging, collision detection, metric extraction, batch runs and
//! the multi-robot formation runner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bina::{self, BinaMode, BinaParams};
use crate::ena::{self, EnaMode, EnaParams};
use crate::error::SimError;
use crate::formation::{
    self, Adjacency, ConsensusState, FormationConfig, GraphSchedule, ReassignOutcome,
};
use crate::math::{integrate_step, wrap_angle, ControlInput, Pose, RobotLimits, Vec2};
use crate::naier::{self, NaierParams, NaierState};
use crate::report::ValidationReport;
use crate::sensing::{self, RangeSensor, VisionSensor};
use crate::world::{Environment, MotionLaw, Obstacle, Shape};

/// Which control law drives the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Pursuit,
    Bina,
    Ena,
    Naier,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Pursuit => "pursuit",
            ControllerKind::Bina => "bina",
            ControllerKind::Ena => "ena",
            ControllerKind::Naier => "naier",
        }
    }
}

/// Per-tick controller mode, logged to the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Pursuit,
    Avoid,
    /// Sector controller with a clear scan.
    Clear,
    /// Sector controller steering to a free interval.
    Steer,
    /// Sector controller with no free interval.
    Blocked,
    Formation,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Pursuit => "pursuit",
            Mode::Avoid => "avoid",
            Mode::Clear => "clear",
            Mode::Steer => "steer",
            Mode::Blocked => "blocked",
            Mode::Formation => "formation",
        }
    }
}

/// One controller decision.
#[derive(Debug, Clone, Copy)]
pub struct Decision {
    pub control: ControlInput,
    pub mode: Mode,
    pub engaged: Option<usize>,
    /// Controller-specific logged signal: the heading-to-boundary angle for
    /// the vision controller, d - d0 for the range controller, the commanded
    /// bearing for the sector controller.
    pub aux: Option<f64>,
}

/// A stateful closed-loop driver around one control law.
pub enum Controller {
    Pursuit {
        limits: RobotLimits,
    },
    Bina {
        params: BinaParams,
        mode: BinaMode,
        vision: VisionSensor,
        d_prev: f64,
        align_prev: f64,
    },
    Ena {
        params: EnaParams,
        mode: EnaMode,
        sensor: RangeSensor,
        align_prev: f64,
        d_prev: f64,
    },
    Naier {
        params: NaierParams,
        state: NaierState,
        /// Replace the desired direction with the target bearing each tick.
        target_reaching: bool,
        control_period: f64,
    },
}

impl Controller {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Controller::Pursuit { .. } => ControllerKind::Pursuit,
            Controller::Bina { .. } => ControllerKind::Bina,
            Controller::Ena { .. } => ControllerKind::Ena,
            Controller::Naier { .. } => ControllerKind::Naier,
        }
    }

    pub fn step(&mut self, env: &Environment, t: f64, pose: &Pose, target: Vec2) -> Decision {
        let bearing = sensing::sense_target(pose, target).bearing;
        match self {
            Controller::Pursuit { limits } => Decision {
                control: bina::pursuit_control(limits, bearing, pose.theta),
                mode: Mode::Pursuit,
                engaged: None,
                aux: None,
            },
            Controller::Bina {
                params,
                mode,
                vision,
                d_prev,
                align_prev,
            } => {
                let align_err = wrap_angle(pose.theta - bearing);
                let aligned = bina::alignment_event(*align_prev, align_err);
                *align_prev = align_err;
                let groups = env.interpolate_clusters(t);
                let p = pose.position();
                // Obstacles are engaged through their covering discs.
                let disc_distance = |g: &crate::world::ObstacleGroup| {
                    let (center, radius) = g.enclosing_circle();
                    p.distance(center) - radius
                };
                let nearest = groups
                    .iter()
                    .min_by(|a, b| disc_distance(a).total_cmp(&disc_distance(b)))
                    .cloned();
                let Some(nearest) = nearest else {
                    *d_prev = f64::INFINITY;
                    return Decision {
                        control: bina::pursuit_control(&params.limits, bearing, pose.theta),
                        mode: Mode::Pursuit,
                        engaged: None,
                        aux: None,
                    };
                };
                let nearest_d = disc_distance(&nearest);

                // Resolve the engaged group across cluster merges/splits: it is
                // the group that now contains the obstacle engaged earlier.
                let engaged_group = match *mode {
                    BinaMode::Avoid { group_id, .. } => groups
                        .iter()
                        .find(|g| g.members.iter().any(|m| m.id == group_id))
                        .cloned()
                        .unwrap_or_else(|| nearest.clone()),
                    BinaMode::Pursuit => nearest.clone(),
                };
                let engaged_d = disc_distance(&engaged_group);

                // Best-effort nearest-first engagement: re-engage when the
                // engaged group has been escaped and another is inside the
                // trigger, or when a different group is decisively closer.
                if let BinaMode::Avoid { .. } = *mode {
                    let escaped =
                        engaged_d > params.trigger_distance && nearest_d <= params.trigger_distance;
                    let decisively_closer = nearest_d < 0.8 * engaged_d;
                    if engaged_group.id() != nearest.id() && (escaped || decisively_closer) {
                        *mode = BinaMode::Avoid {
                            group_id: nearest.id(),
                            entered_at: t,
                        };
                    }
                }
                let (active_group, active_d) = match *mode {
                    BinaMode::Avoid { group_id, .. } => {
                        let g = groups
                            .iter()
                            .find(|g| g.members.iter().any(|m| m.id == group_id))
                            .cloned()
                            .unwrap_or_else(|| nearest.clone());
                        let d = disc_distance(&g);
                        (g, d)
                    }
                    BinaMode::Pursuit => (nearest.clone(), nearest_d),
                };
                let (_, covering_radius) = active_group.enclosing_circle();
                let standoff = params.standoff(covering_radius);
                *mode = bina::switch_mode(
                    *mode,
                    active_group.id(),
                    if matches!(*mode, BinaMode::Pursuit) {
                        nearest_d
                    } else {
                        active_d
                    },
                    *d_prev,
                    aligned,
                    params,
                    standoff,
                    t,
                );
                *d_prev = nearest_d;

                match *mode {
                    BinaMode::Pursuit => Decision {
                        control: bina::pursuit_control(&params.limits, bearing, pose.theta),
                        mode: Mode::Pursuit,
                        engaged: None,
                        aux: None,
                    },
                    BinaMode::Avoid { group_id, .. } => {
                        let group = groups
                            .iter()
                            .find(|g| g.members.iter().any(|m| m.id == group_id))
                            .unwrap_or(&nearest);
                        // Inside the covering disc but outside the real shape:
                        // fall back to the raw-region cone.
                        let reading = vision
                            .sense_covering_disc(group, t, pose)
                            .or_else(|_| vision.sense(group, t, pose));
                        match reading {
                            Ok(reading) => {
                                let control = bina::avoid_control(&reading, params, pose.heading());
                                // Avoiding angle against the chosen original cone
                                // boundary (locks near -alpha_0 on side 1, +alpha_0
                                // on side 2 for slow obstacles).
                                let (b1, b2) = bina::enlarge_cone(&reading, params.avoiding_angle);
                                let (l1, l2) = bina::occlusion_vectors(
                                    b1,
                                    b2,
                                    params.limits.v_max,
                                    params.obstacle_speed_bound,
                                );
                                let side =
                                    bina::select_boundary(l1, l2, reading.velocity, pose.heading());
                                let boundary = if side == 1 {
                                    reading.alpha1
                                } else {
                                    reading.alpha2
                                };
                                Decision {
                                    control,
                                    mode: Mode::Avoid,
                                    engaged: Some(group.id()),
                                    aux: Some(wrap_angle(pose.theta - boundary)),
                                }
                            }
                            // Inside the group: keep last-resort pursuit steering.
                            Err(_) => Decision {
                                control: bina::pursuit_control(&params.limits, bearing, pose.theta),
                                mode: Mode::Avoid,
                                engaged: Some(group.id()),
                                aux: None,
                            },
                        }
                    }
                }
            }
            Controller::Ena {
                params,
                mode,
                sensor,
                align_prev,
                d_prev,
            } => {
                let align_err = wrap_angle(pose.theta - bearing);
                let aligned = bina::alignment_event(*align_prev, align_err);
                *align_prev = align_err;
                let reading = sensor.sense(env, t, pose);
                *mode = ena::switch_mode(*mode, &reading, *d_prev, aligned, params);
                *d_prev = reading.distance;
                match *mode {
                    EnaMode::Pursuit => Decision {
                        control: ena::pursuit_control(&params.limits, bearing, pose.theta),
                        mode: Mode::Pursuit,
                        engaged: None,
                        aux: None,
                    },
                    EnaMode::Avoid => Decision {
                        control: ena::avoid_control(&reading, params),
                        mode: Mode::Avoid,
                        engaged: reading.group_id,
                        aux: Some(reading.distance - params.standoff),
                    },
                }
            }
            Controller::Naier {
                params,
                state,
                target_reaching,
                control_period,
            } => {
                if *target_reaching {
                    params.desired_direction = bearing;
                }
                // Between decision instants the held command applies; the scan
                // is only taken when a decision is due.
                if let Some(control) = state.held_command(params, t, *control_period) {
                    let commanded = state.commanded_bearing();
                    return Decision {
                        control,
                        mode: if commanded.is_some() {
                            Mode::Steer
                        } else {
                            Mode::Clear
                        },
                        engaged: None,
                        aux: commanded,
                    };
                }
                let scan =
                    sensing::sense_sectors(env, t, pose, params.disc_diameter, params.resolution);
                match state.control(&scan, params, pose.theta, t, *control_period) {
                    Ok(control) => {
                        let commanded = state.commanded_bearing();
                        Decision {
                            control,
                            mode: if commanded.is_some() {
                                Mode::Steer
                            } else {
                                Mode::Clear
                            },
                            engaged: None,
                            aux: commanded,
                        }
                    }
                    Err(_) => Decision {
                        // Fully blocked: rotate in place toward the rear.
                        control: ControlInput::new(params.limits.v_min, params.limits.u_max),
                        mode: Mode::Blocked,
                        engaged: None,
                        aux: None,
                    },
                }
            }
        }
    }
}

/// Controller selection plus law parameters, as read from a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobotSpec {
    pub pose: Pose,
    pub limits: RobotLimits,
    pub controller: ControllerKind,
    pub bina: Option<BinaParams>,
    pub ena: Option<EnaParams>,
    pub naier: Option<NaierParams>,
    /// Track the target bearing (true) or hold the configured desired
    /// direction (false) in the sector controller.
    #[serde(default = "default_true")]
    pub naier_target_reaching: bool,
    /// Sensing cap for the range/vision sensors (None = unlimited).
    pub sensing_range: Option<f64>,
}

fn default_true() -> bool {
    true
}

impl RobotSpec {
    /// Build the stateful driver for `kind`, falling back to pursuit when the
    /// matching parameter block is missing.
    pub fn build_controller(&self, kind: ControllerKind, control_period: f64) -> Controller {
        match kind {
            ControllerKind::Pursuit => Controller::Pursuit {
                limits: self.limits,
            },
            ControllerKind::Bina => match self.bina {
                Some(params) => Controller::Bina {
                    params,
                    mode: BinaMode::Pursuit,
                    vision: VisionSensor::new(self.sensing_range),
                    d_prev: f64::INFINITY,
                    align_prev: f64::NAN,
                },
                None => Controller::Pursuit {
                    limits: self.limits,
                },
            },
            ControllerKind::Ena => match self.ena {
                Some(params) => Controller::Ena {
                    params,
                    mode: EnaMode::Pursuit,
                    sensor: RangeSensor::new(control_period, true, self.sensing_range),
                    align_prev: f64::NAN,
                    d_prev: f64::INFINITY,
                },
                None => Controller::Pursuit {
                    limits: self.limits,
                },
            },
            ControllerKind::Naier => match self.naier {
                Some(params) => Controller::Naier {
                    params,
                    state: NaierState::default(),
                    target_reaching: self.naier_target_reaching,
                    control_period,
                },
                None => Controller::Pursuit {
                    limits: self.limits,
                },
            },
        }
    }
}

/// A fully assembled single-robot navigation scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub environment: Environment,
    pub robot: RobotSpec,
    pub target: Vec2,
    pub capture_radius: f64,
    pub duration: f64,
    /// Control period T_s.
    pub control_period: f64,
    pub substeps: usize,
    pub seed: u64,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Terminal {
    TargetReached { t: f64 },
    Collision { t: f64 },
    Timeout,
}

impl Terminal {
    pub fn reached(&self) -> bool {
        matches!(self, Terminal::TargetReached { .. })
    }
}

/// One logged control tick.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub robot: usize,
    pub pose: Pose,
    pub control: ControlInput,
    pub mode: Mode,
    /// Distance to the nearest obstacle at this tick.
    pub clearance: f64,
    pub engaged: Option<usize>,
    pub aux: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<TickRecord>,
    pub terminal: Terminal,
    pub validations: Vec<ValidationReport>,
}

/// Scalar summaries of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub terminal: Terminal,
    pub navigation_time: Option<f64>,
    pub min_clearance: f64,
    /// Arc length actually driven (sum of v dt per tick).
    pub path_length: f64,
    /// Fraction of ticks spent in an avoidance mode.
    pub avoid_fraction: f64,
    pub avoiding_angle_mean: Option<f64>,
    pub avoiding_angle_std: Option<f64>,
    /// Mean |d - d0| over settled avoidance ticks.
    pub standoff_mean_abs_error: Option<f64>,
    pub blocked_ticks: usize,
}

/// Time dropped from the start of each avoidance span before the avoiding
/// angle statistics are taken (entry transient).
const AVOID_TRANSIENT_SECONDS: f64 = 2.5;
/// Settling band for the standoff error statistic (m).
const STANDOFF_SETTLING_BAND: f64 = 0.3;

/// Run the scenario's controller choice (single controller; use
/// [`run_with_controller`] to override).
pub fn run(scenario: &Scenario) -> Result<(RunLog, Metrics), SimError> {
    run_with_controller(scenario, scenario.robot.controller)
}

/// Execute one closed-loop run with the given control law.
pub fn run_with_controller(
    scenario: &Scenario,
    kind: ControllerKind,
) -> Result<(RunLog, Metrics), SimError> {
    let env = &scenario.environment;
    let mut controller = scenario
        .robot
        .build_controller(kind, scenario.control_period);
    let mut pose = scenario.robot.pose;
    let dt = scenario.control_period;
    let substeps = scenario.substeps.max(1);
    let ticks = (scenario.duration / dt).ceil() as usize;
    let mut records = Vec::with_capacity(ticks);
    let mut terminal = Terminal::Timeout;

    let validations = validate_scenario(scenario, kind);

    'ticks: for k in 0..=ticks {
        let t = k as f64 * dt;
        if !pose.is_finite() {
            return Err(SimError::NonFinite { t, robot: 0 });
        }
        let query = env.distance_to_environment(t, pose.position());
        if query.penetrating {
            terminal = Terminal::Collision { t };
            records.push(TickRecord {
                t,
                robot: 0,
                pose,
                control: ControlInput::default(),
                mode: Mode::Pursuit,
                clearance: 0.0,
                engaged: query.obstacle_id,
                aux: None,
            });
            break;
        }
        if pose.position().distance(scenario.target) <= scenario.capture_radius {
            terminal = Terminal::TargetReached { t };
            break;
        }
        if k == ticks {
            break;
        }
        let decision = controller.step(env, t, &pose, scenario.target);
        records.push(TickRecord {
            t,
            robot: 0,
            pose,
            control: decision.control,
            mode: decision.mode,
            clearance: query.distance,
            engaged: decision.engaged,
            aux: decision.aux,
        });
        // Control held constant over the whole tick; substeps only refine the
        // collision checks (the arc integrator is exact for held controls).
        let h = dt / substeps as f64;
        for s in 0..substeps {
            pose = integrate_step(pose, decision.control, h);
            let ts = t + (s + 1) as f64 * h;
            if env.distance_to_environment(ts, pose.position()).penetrating {
                terminal = Terminal::Collision { t: ts };
                break 'ticks;
            }
        }
    }

    let log = RunLog {
        records,
        terminal,
        validations,
    };
    let metrics = extract_metrics(&log, dt, kind);
    Ok((log, metrics))
}

/// Run every applicable assumption validator; failures become warnings, the
/// run itself proceeds.
pub fn validate_scenario(scenario: &Scenario, kind: ControllerKind) -> Vec<ValidationReport> {
    let mut out = Vec::new();
    match kind {
        ControllerKind::Bina => {
            if let Some(p) = &scenario.robot.bina {
                out.push(bina::validate_assumptions(
                    &scenario.environment,
                    p,
                    scenario.target,
                    scenario.duration,
                ));
            }
        }
        ControllerKind::Naier => {
            if let Some(p) = &scenario.robot.naier {
                out.push(naier::validate_assumptions(
                    p,
                    &scenario.environment,
                    Some(&scenario.robot.pose),
                    scenario.duration,
                ));
            }
        }
        _ => {}
    }
    out
}

/// Per-tick summaries of a finished log. The aux channel is interpreted per
/// control law: heading-to-boundary angle (vision), d - d0 (range).
pub fn extract_metrics(log: &RunLog, dt: f64, kind: ControllerKind) -> Metrics {
    let records = &log.records;
    let min_clearance = records
        .iter()
        .map(|r| r.clearance)
        .fold(f64::INFINITY, f64::min)
        .min(f64::INFINITY);
    let path_length: f64 = records.iter().map(|r| r.control.v * dt).sum();
    let avoid_ticks = records
        .iter()
        .filter(|r| matches!(r.mode, Mode::Avoid | Mode::Steer))
        .count();
    let avoid_fraction = if records.is_empty() {
        0.0
    } else {
        avoid_ticks as f64 / records.len() as f64
    };

    // Avoiding-angle series: avoid-mode aux, transient ticks dropped per span.
    let mut angle_series = Vec::new();
    let mut span = 0usize;
    let transient_ticks = (AVOID_TRANSIENT_SECONDS / dt).round() as usize;
    if kind == ControllerKind::Bina {
        for r in records {
            if r.mode == Mode::Avoid {
                if let Some(aux) = r.aux {
                    span += 1;
                    if span > transient_ticks {
                        angle_series.push(aux);
                    }
                }
            } else {
                span = 0;
            }
        }
    }
    let (avoiding_angle_mean, avoiding_angle_std) = if angle_series.len() >= 2 {
        let n = angle_series.len() as f64;
        let mean = angle_series.iter().sum::<f64>() / n;
        let var = angle_series
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        (Some(mean), Some(var.sqrt()))
    } else {
        (None, None)
    };

    // Standoff error: avoid-mode |d - d0| after first entering the settling band.
    let mut settled = false;
    let mut standoff_errs = Vec::new();
    if kind == ControllerKind::Ena {
        for r in records {
            if r.mode == Mode::Avoid {
                if let Some(aux) = r.aux {
                    if aux.abs() <= STANDOFF_SETTLING_BAND {
                        settled = true;
                    }
                    if settled {
                        standoff_errs.push(aux.abs());
                    }
                }
            }
        }
    }
    let standoff_mean_abs_error = if standoff_errs.is_empty() {
        None
    } else {
        Some(standoff_errs.iter().sum::<f64>() / standoff_errs.len() as f64)
    };

    Metrics {
        terminal: log.terminal,
        navigation_time: match log.terminal {
            Terminal::TargetReached { t } => Some(t),
            _ => None,
        },
        min_clearance,
        path_length,
        avoid_fraction,
        avoiding_angle_mean,
        avoiding_angle_std,
        standoff_mean_abs_error,
        blocked_ticks: records.iter().filter(|r| r.mode == Mode::Blocked).count(),
    }
}

// ---------------------------------------------------------------------------
// Batch runs
// ---------------------------------------------------------------------------

/// Randomization ranges for comparison batches.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSpec {
    pub runs: usize,
    pub obstacle_count: [usize; 2],
    pub radius_range: [f64; 2],
    pub speed_range: [f64; 2],
    /// Use curved/oscillating motion laws instead of constant velocities.
    #[serde(default)]
    pub nonlinear: bool,
    /// Obstacle spawn region [x0, y0, x1, y1].
    pub spawn_region: [f64; 4],
    /// Keep-out radius around the robot start and the target.
    pub clear_radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRow {
    pub run: usize,
    pub times: [Option<f64>; 3],
    pub outcomes: [Terminal; 3],
    pub min_clearances: [f64; 3],
    pub best: Option<ControllerKind>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchTable {
    pub rows: Vec<BatchRow>,
    pub wins: [usize; 3],
    pub means: [Option<f64>; 3],
    pub stds: [Option<f64>; 3],
}

pub const BATCH_CONTROLLERS: [ControllerKind; 3] = [
    ControllerKind::Bina,
    ControllerKind::Ena,
    ControllerKind::Naier,
];

/// Run the three controllers over `spec.runs` randomized worlds. Threads are
/// capped by the NAVKIT_THREADS environment variable when set.
pub fn run_batch(scenario: &Scenario, spec: &BatchSpec, seed: u64) -> BatchTable {
    let indices: Vec<usize> = (0..spec.runs).collect();
    let worker = |run: &usize| -> BatchRow {
        let run = *run;
        let env = randomized_environment(scenario, spec, seed.wrapping_add(run as u64));
        let mut variant = scenario.clone();
        variant.environment = env;
        let mut times = [None; 3];
        let mut outcomes = [Terminal::Timeout; 3];
        let mut clearances = [f64::INFINITY; 3];
        for (slot, kind) in BATCH_CONTROLLERS.iter().enumerate() {
            match run_with_controller(&variant, *kind) {
                Ok((_, metrics)) => {
                    times[slot] = metrics.navigation_time;
                    outcomes[slot] = metrics.terminal;
                    clearances[slot] = metrics.min_clearance;
                }
                Err(_) => outcomes[slot] = Terminal::Timeout,
            }
        }
        let best = times
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|t| (i, t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| BATCH_CONTROLLERS[i]);
        BatchRow {
            run,
            times,
            outcomes,
            min_clearances: clearances,
            best,
        }
    };

    let mut rows: Vec<BatchRow> = if let Some(threads) = batch_threads() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build();
        match pool {
            Ok(pool) => pool.install(|| {
                use rayon::prelude::*;
                indices.par_iter().map(worker).collect()
            }),
            Err(_) => indices.iter().map(worker).collect(),
        }
    } else {
        use rayon::prelude::*;
        indices.par_iter().map(worker).collect()
    };
    rows.sort_by_key(|r| r.run);

    let mut wins = [0usize; 3];
    for row in &rows {
        if let Some(best) = row.best {
            let i = BATCH_CONTROLLERS.iter().position(|k| *k == best).unwrap();
            wins[i] += 1;
        }
    }
    let mut means = [None; 3];
    let mut stds = [None; 3];
    for i in 0..3 {
        let ts: Vec<f64> = rows.iter().filter_map(|r| r.times[i]).collect();
        if !ts.is_empty() {
            let mean = ts.iter().sum::<f64>() / ts.len() as f64;
            let var = ts.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / ts.len() as f64;
            means[i] = Some(mean);
            stds[i] = Some(var.sqrt());
        }
    }
    BatchTable {
        rows,
        wins,
        means,
        stds,
    }
}

fn batch_threads() -> Option<usize> {
    std::env::var("NAVKIT_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
}

/// Draw a randomized world per the batch ranges: disc obstacles scattered in
/// the spawn region, clear of the start, the target, and each other.
pub fn randomized_environment(scenario: &Scenario, spec: &BatchSpec, seed: u64) -> Environment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = if spec.obstacle_count[0] >= spec.obstacle_count[1] {
        spec.obstacle_count[0]
    } else {
        rng.gen_range(spec.obstacle_count[0]..=spec.obstacle_count[1])
    };
    let [x0, y0, x1, y1] = spec.spawn_region;
    let start = scenario.robot.pose.position();
    let target = scenario.target;
    let mut obstacles: Vec<Obstacle> = Vec::new();
    'outer: for id in 0..count {
        for _attempt in 0..200 {
            let radius = rng.gen_range(spec.radius_range[0]..=spec.radius_range[1]);
            let center = Vec2::new(rng.gen_range(x0..=x1), rng.gen_range(y0..=y1));
            let clear_of_endpoints = center.distance(start) >= spec.clear_radius + radius
                && center.distance(target) >= spec.clear_radius + radius;
            let clear_of_others = obstacles.iter().all(|o| match &o.shape {
                Shape::Disc {
                    center: c,
                    radius: r,
                } => center.distance(*c) >= radius + r + 1.0,
                _ => true,
            });
            if !(clear_of_endpoints && clear_of_others) {
                continue;
            }
            let speed = rng.gen_range(spec.speed_range[0]..=spec.speed_range[1]);
            let direction = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let motion = if speed == 0.0 {
                MotionLaw::Static
            } else if spec.nonlinear {
                // Split the speed budget: hypot(0.6, 0.8) = 1.
                let base = Vec2::from_angle(direction) * (0.6 * speed);
                let frequency = rng.gen_range(0.2..0.6);
                let amplitude = 0.8 * speed / frequency;
                MotionLaw::Sinusoid {
                    base_velocity: base,
                    amplitude,
                    frequency,
                }
            } else {
                MotionLaw::ConstantVelocity {
                    velocity: Vec2::from_angle(direction) * speed,
                }
            };
            obstacles.push(Obstacle {
                id,
                shape: Shape::Disc { center, radius },
                motion,
            });
            continue 'outer;
        }
        // Region too crowded for another obstacle; place fewer.
        break;
    }
    Environment::new(
        obstacles,
        scenario.environment.interpolation_gap,
        scenario.environment.d_safe,
    )
}

// ---------------------------------------------------------------------------
// Formation runs
// ---------------------------------------------------------------------------

/// Multi-robot formation scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormationScenario {
    pub config: FormationConfig,
    /// v_min = slow speed, v_max = fast speed, u_max = turning bound.
    pub limits: RobotLimits,
    pub schedule: GraphSchedule,
    pub anonymous: bool,
    pub duration: f64,
    pub control_period: f64,
    pub seed: u64,
    /// Explicit initial (pose, speed) list; random when empty.
    #[serde(default)]
    pub initial: Vec<(Pose, f64)>,
    /// Initial slot indices for the anonymous variant (may repeat).
    #[serde(default)]
    pub initial_assignment: Vec<usize>,
    /// Half-size of the random initial-pose box.
    #[serde(default = "default_spawn_half")]
    pub spawn_half_extent: f64,
}

fn default_spawn_half() -> f64 {
    8.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormationTick {
    pub t: f64,
    pub robot: usize,
    pub pose: Pose,
    pub control: ControlInput,
    /// Distance to the nearest other robot.
    pub clearance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormationRunLog {
    pub records: Vec<FormationTick>,
    /// (round index, assignment after the round) for the anonymous variant.
    pub assignment_trace: Vec<(usize, Vec<usize>)>,
    pub converged_at: Option<f64>,
    /// Final per-consecutive-pair (delta-x, delta-y) errors in the consensus
    /// frame, against the assigned slots.
    pub pair_errors: Vec<(f64, f64)>,
    pub final_assignment: Vec<usize>,
    /// Consensus spread history per instant: (theta, v, x-anchor, y-anchor).
    pub consensus_spreads: Vec<[f64; 4]>,
}

/// Convergence thresholds for the formation runner.
const FORMATION_POS_TOL: f64 = 0.10;
const FORMATION_HEADING_TOL: f64 = 0.05;
const COMM_PERIOD: f64 = 1.0;

/// Run the consensus + fictitious-target formation protocol.
pub fn run_formation(spec: &FormationScenario) -> FormationRunLog {
    let n = spec.config.slots.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let limits = spec.limits;

    let mut poses: Vec<Pose>;
    let mut speeds: Vec<f64>;
    if spec.initial.is_empty() {
        let e = spec.spawn_half_extent;
        poses = (0..n)
            .map(|_| {
                Pose::new(
                    rng.gen_range(-e..e),
                    rng.gen_range(-e..e),
                    rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                )
            })
            .collect();
        speeds = (0..n)
            .map(|_| rng.gen_range(limits.v_min..limits.v_max))
            .collect();
    } else {
        assert_eq!(
            spec.initial.len(),
            n,
            "initial conditions must match the slot count"
        );
        poses = spec.initial.iter().map(|(p, _)| *p).collect();
        speeds = spec.initial.iter().map(|(_, v)| *v).collect();
    }
    let mut states: Vec<ConsensusState> = (0..n)
        .map(|_| ConsensusState {
            theta: rng.gen_range(0.0..std::f64::consts::PI),
            x_ofs: rng.gen_range(-2.0..2.0),
            y_ofs: rng.gen_range(-2.0..2.0),
            v: rng.gen_range(limits.v_min..limits.v_max),
        })
        .collect();

    let mut assignment: Vec<usize> = if spec.anonymous {
        if spec.initial_assignment.is_empty() {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            spec.initial_assignment.clone()
        }
    } else {
        (0..n).collect()
    };
    let (slot_adj, _) = formation::slot_graph(&spec.config);

    let dt = spec.control_period;
    let ticks = (spec.duration / dt).ceil() as usize;
    let ticks_per_comm = (COMM_PERIOD / dt).round().max(1.0) as usize;
    let mut comm_positions: Vec<Vec2> = poses.iter().map(|p| p.position()).collect();
    let mut comm_instant = 0usize;
    let mut records = Vec::new();
    let mut assignment_trace = vec![(0usize, assignment.clone())];
    let mut consensus_spreads = Vec::new();
    let mut converged_at = None;
    let mut stable_rounds = 0usize;

    for k in 0..=ticks {
        let t = k as f64 * dt;
        // Communication instants land on whole seconds.
        if k > 0 && k % ticks_per_comm == 0 {
            let now: Vec<Vec2> = poses.iter().map(|p| p.position()).collect();
            let graph: Adjacency = spec.schedule.adjacency(n, comm_instant, spec.seed);
            states = formation::consensus_step(&states, &comm_positions, &now, &graph);
            comm_positions = now.clone();
            comm_instant += 1;
            consensus_spreads.push(consensus_spread(&states, &now));

            if spec.anonymous && comm_instant % spec.config.periods_per_round == 0 {
                let round = comm_instant / spec.config.periods_per_round;
                let ReassignOutcome {
                    assignment: next,
                    changed,
                    ..
                } = formation::reassign_slots(
                    &assignment,
                    &now,
                    &states,
                    &spec.config,
                    &slot_adj,
                    t,
                    &mut rng,
                );
                if changed.is_empty() && is_permutation(&next) {
                    stable_rounds += 1;
                } else {
                    stable_rounds = 0;
                }
                if next != assignment {
                    assignment = next;
                    assignment_trace.push((round, assignment.clone()));
                }
            }
        }

        // Convergence check at whole seconds.
        if k % ticks_per_comm == 0 && converged_at.is_none() {
            let errors = pair_errors(&poses, &states, &spec.config, &assignment);
            let max_err = errors
                .iter()
                .map(|(ex, ey)| ex.abs().max(ey.abs()))
                .fold(0.0f64, f64::max);
            let heading_spread = spread(poses.iter().map(|p| p.theta).collect());
            let assignment_ok =
                !spec.anonymous || (is_permutation(&assignment) && stable_rounds >= 2);
            if max_err <= FORMATION_POS_TOL
                && heading_spread <= FORMATION_HEADING_TOL
                && assignment_ok
            {
                converged_at = Some(t);
            }
        }

        if k == ticks {
            break;
        }
        let positions: Vec<Vec2> = poses.iter().map(|p| p.position()).collect();
        for i in 0..n {
            let frame = formation::fictitious_target(
                &states[i],
                positions[i],
                spec.config.slots[assignment[i]],
                spec.config.lead,
                t,
            );
            let velocity = poses[i].heading() * speeds[i].max(1e-9);
            let control = formation::formation_control(&frame, velocity, &limits);
            let clearance = (0..n)
                .filter(|&m| m != i)
                .map(|m| positions[i].distance(positions[m]))
                .fold(f64::INFINITY, f64::min);
            records.push(FormationTick {
                t,
                robot: i,
                pose: poses[i],
                control,
                clearance,
            });
            poses[i] = integrate_step(poses[i], control, dt);
            speeds[i] = control.v;
        }
    }

    let final_assignment = assignment.clone();
    let errors = pair_errors(&poses, &states, &spec.config, &assignment);
    FormationRunLog {
        records,
        assignment_trace,
        converged_at,
        pair_errors: errors,
        final_assignment,
        consensus_spreads,
    }
}

/// Anonymous-variant wrapper: doubles the reassignment period on
/// non-convergence, up to `max_doublings` restarts.
pub fn run_formation_escalating(spec: &FormationScenario, max_doublings: usize) -> FormationRunLog {
    let mut attempt = spec.clone();
    for _ in 0..max_doublings {
        let log = run_formation(&attempt);
        if log.converged_at.is_some() {
            return log;
        }
        attempt.config.periods_per_round *= 2;
        attempt.duration *= 1.5;
    }
    run_formation(&attempt)
}

fn is_permutation(assignment: &[usize]) -> bool {
    let mut seen = vec![false; assignment.len()];
    for &a in assignment {
        if a >= seen.len() || seen[a] {
            return false;
        }
        seen[a] = true;
    }
    true
}

fn spread(values: Vec<f64>) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}

/// Spreads of the four consensus quantities (theta, v, x-anchor, y-anchor).
pub fn consensus_spread(states: &[ConsensusState], positions: &[Vec2]) -> [f64; 4] {
    [
        spread(states.iter().map(|s| s.theta).collect()),
        spread(states.iter().map(|s| s.v).collect()),
        spread(
            states
                .iter()
                .zip(positions)
                .map(|(s, p)| p.x + s.x_ofs)
                .collect(),
        ),
        spread(
            states
                .iter()
                .zip(positions)
                .map(|(s, p)| p.y + s.y_ofs)
                .collect(),
        ),
    ]
}

/// Relative-position errors of consecutive robot pairs (cyclic), measured in
/// the mean-consensus frame against the assigned slot differences.
pub fn pair_errors(
    poses: &[Pose],
    states: &[ConsensusState],
    config: &FormationConfig,
    assignment: &[usize],
) -> Vec<(f64, f64)> {
    let n = poses.len();
    let theta_mean = states.iter().map(|s| s.theta).sum::<f64>() / n as f64;
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let delta =
                formation::world_to_frame(poses[i].position() - poses[j].position(), theta_mean);
            let want = config.slots[assignment[i]] - config.slots[assignment[j]];
            (delta.x - want.x, delta.y - want.y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn empty_world_scenario() -> Scenario {
        Scenario {
            label: "test".into(),
            environment: Environment::new(vec![], 1.0, 0.5),
            robot: RobotSpec {
                pose: Pose::new(0.0, 0.0, 0.0),
                limits: RobotLimits::new(0.0, 1.0, 1.5).unwrap(),
                controller: ControllerKind::Pursuit,
                bina: None,
                ena: None,
                naier: None,
                naier_target_reaching: true,
                sensing_range: None,
            },
            target: Vec2::new(5.0, 0.0),
            capture_radius: 0.1,
            duration: 20.0,
            control_period: 0.1,
            substeps: 4,
            seed: 1,
        }
    }

    #[test]
    fn straight_line_navigation_time() {
        let scenario = empty_world_scenario();
        let (_, metrics) = run(&scenario).unwrap();
        let t = metrics.navigation_time.expect("target must be reached");
        // 5 m at 1 m/s, minus the capture radius, within one tick.
        assert!((t - 5.0).abs() <= 0.2, "navigation time {t}");
    }

    #[test]
    fn starting_at_target_terminates_immediately() {
        let mut scenario = empty_world_scenario();
        scenario.robot.pose = Pose::new(5.0, 0.0, 0.0);
        let (log, metrics) = run(&scenario).unwrap();
        assert_eq!(metrics.navigation_time, Some(0.0));
        assert!(log.records.is_empty());
    }

    #[test]
    fn determinism_bit_identical_logs() {
        let mut scenario = empty_world_scenario();
        scenario.environment = Environment::new(
            vec![Obstacle {
                id: 0,
                shape: Shape::Disc {
                    center: Vec2::new(2.5, 0.1),
                    radius: 0.6,
                },
                motion: MotionLaw::ConstantVelocity {
                    velocity: Vec2::new(0.0, -0.2),
                },
            }],
            1.0,
            0.3,
        );
        scenario.robot.ena = Some(EnaParams {
            gain: 1.0,
            saturation_width: 0.3,
            standoff: 0.8,
            trigger_distance: 1.5,
            exit_mismatch: 0.1,
            d_safe: 0.3,
            limits: scenario.robot.limits,
        });
        let (a, _) = run_with_controller(&scenario, ControllerKind::Ena).unwrap();
        let (b, _) = run_with_controller(&scenario, ControllerKind::Ena).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.pose, rb.pose);
            assert_eq!(ra.control, rb.control);
        }
    }

    #[test]
    fn path_length_matches_chord_sum() {
        let scenario = empty_world_scenario();
        let (log, metrics) = run(&scenario).unwrap();
        let mut chord = 0.0;
        for w in log.records.windows(2) {
            chord += w[0].pose.position().distance(w[1].pose.position());
        }
        // Last tick's motion is not covered by a following record.
        let tail = log.records.last().unwrap().control.v * 0.1;
        assert_abs_diff_eq!(
            metrics.path_length,
            chord + tail,
            epsilon = metrics.path_length * 1e-3
        );
    }

    #[test]
    fn batch_is_deterministic_and_complete() {
        let mut scenario = empty_world_scenario();
        scenario.target = Vec2::new(12.0, 0.0);
        scenario.duration = 60.0;
        scenario.robot.bina = Some(BinaParams {
            avoiding_angle: 0.8,
            trigger_distance: 2.5,
            d_safe: 0.3,
            obstacle_speed_bound: 0.45,
            limits: scenario.robot.limits,
        });
        scenario.robot.ena = Some(EnaParams {
            gain: 1.0,
            saturation_width: 0.3,
            standoff: 0.8,
            trigger_distance: 2.0,
            exit_mismatch: 0.1,
            d_safe: 0.3,
            limits: scenario.robot.limits,
        });
        scenario.robot.naier = Some(NaierParams {
            desired_direction: 0.0,
            disc_diameter: 3.0,
            d_safe: 0.3,
            decision_period: 0.1,
            resolution: std::f64::consts::PI / 360.0,
            environment_speed: 0.45,
            limits: scenario.robot.limits,
        });
        let spec = BatchSpec {
            runs: 3,
            obstacle_count: [1, 2],
            radius_range: [0.4, 0.7],
            speed_range: [0.1, 0.4],
            nonlinear: false,
            spawn_region: [3.0, -2.0, 9.0, 2.0],
            clear_radius: 1.5,
        };
        let a = run_batch(&scenario, &spec, 7);
        let b = run_batch(&scenario, &spec, 7);
        assert_eq!(a.rows.len(), 3);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.times, rb.times);
            assert_eq!(ra.best, rb.best);
        }
    }

    #[test]
    fn formation_square_converges() {
        let spec = FormationScenario {
            config: FormationConfig {
                slots: vec![
                    Vec2::new(0.0, 0.0),
                    Vec2::new(0.0, 5.0),
                    Vec2::new(5.0, 0.0),
                    Vec2::new(5.0, 5.0),
                ],
                lead: 5.0,
                detection_range: 10.0,
                epsilon: 1.0,
                periods_per_round: 20,
            },
            limits: RobotLimits::new(0.3, 1.0, 1.0).unwrap(),
            schedule: GraphSchedule::Complete,
            anonymous: false,
            duration: 120.0,
            // Heading chatter is u_max * T_s; keep it inside the convergence
            // tolerance.
            control_period: 0.02,
            seed: 11,
            initial: vec![],
            initial_assignment: vec![],
            spawn_half_extent: 6.0,
        };
        let log = run_formation(&spec);
        assert!(log.converged_at.is_some(), "square formation must converge");
        for (ex, ey) in &log.pair_errors {
            assert!(
                ex.abs() <= 0.15 && ey.abs() <= 0.15,
                "pair error ({ex}, {ey})"
            );
        }
    }
}
