//! Sector-scan navigation toward the nearest free bearing interval.
//!
//! At each decision instant the scan of the look-ahead disc is reduced to
//! maximal free bearing intervals. When the scan is clear the robot turns
//! toward the desired direction; otherwise it turns toward the middle of the
//! free interval closest to its heading. Between decision instants the
//! angular velocity is held constant (sampled-data control at period delta).

use serde::{Deserialize, Serialize};

use crate::error::NavError;
use crate::math::{ControlInput, RobotLimits};
use crate::report::{CheckItem, ValidationReport};
use crate::sensing::SectorScan;
use crate::world::Environment;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NaierParams {
    /// Desired direction theta_0 in (-pi, pi]. The target-reaching variant
    /// replaces it each decision instant with the bearing to the target.
    pub desired_direction: f64,
    /// Look-ahead disc diameter D_s (m).
    pub disc_diameter: f64,
    pub d_safe: f64,
    /// Decision period delta (s); control is held constant between decisions.
    pub decision_period: f64,
    /// Bearing grid spacing (radians); must divide pi evenly.
    pub resolution: f64,
    /// Environment displacement speed bound V_E (m/s), for the validator.
    pub environment_speed: f64,
    pub limits: RobotLimits,
}

impl NaierParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.disc_diameter <= 0.0 {
            return Err("look-ahead diameter must be positive".into());
        }
        if self.decision_period <= 0.0 {
            return Err("decision period must be positive".into());
        }
        Ok(())
    }
}

/// Maximal open bearing intervals where the scan reads free, on the unwrapped
/// axis (heading - pi, heading + pi). The flag is 0 when the whole range is free.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeIntervals {
    pub intervals: Vec<(f64, f64)>,
    pub blocked_flag: u8,
}

/// Extract maximal free runs from the scan grid. Interval endpoints are the
/// outermost blocked grid bearings (or the scan edges), expressed as absolute
/// bearings on the axis unwrapped around the scan heading.
pub fn extract_intervals(scan: &SectorScan) -> FreeIntervals {
    let n = scan.occupied.len();
    let mut intervals = Vec::new();
    let any_blocked = scan.occupied.iter().any(|m| *m);
    if !any_blocked {
        return FreeIntervals {
            intervals: vec![(
                scan.heading - std::f64::consts::PI,
                scan.heading + std::f64::consts::PI,
            )],
            blocked_flag: 0,
        };
    }
    let mut run_start: Option<f64> = None;
    let mut last_blocked_bearing = scan.heading - std::f64::consts::PI;
    for i in 0..n {
        let bearing = scan.heading + scan.offsets[i];
        if scan.occupied[i] {
            if run_start.is_some() {
                intervals.push((run_start.take().unwrap(), bearing));
            }
            last_blocked_bearing = bearing;
        } else if run_start.is_none() {
            run_start = Some(last_blocked_bearing);
        }
    }
    if let Some(start) = run_start {
        intervals.push((start, scan.heading + std::f64::consts::PI));
    }
    FreeIntervals {
        intervals,
        blocked_flag: 1,
    }
}

/// Index of the free interval containing the heading, or failing that the one
/// whose nearer endpoint is angularly closest; ties pick the lower endpoint.
pub fn nearest_interval(free: &FreeIntervals, theta: f64) -> Result<usize, NavError> {
    if free.intervals.is_empty() {
        return Err(NavError::Blocked);
    }
    for (i, (lo, hi)) in free.intervals.iter().enumerate() {
        if theta > *lo && theta < *hi {
            return Ok(i);
        }
    }
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    let mut best_endpoint = f64::INFINITY;
    for (i, (lo, hi)) in free.intervals.iter().enumerate() {
        let d = (lo - theta).abs().min((hi - theta).abs());
        let endpoint = if (lo - theta).abs() <= (hi - theta).abs() {
            *lo
        } else {
            *hi
        };
        if d < best_dist || (d == best_dist && endpoint < best_endpoint) {
            best = i;
            best_dist = d;
            best_endpoint = endpoint;
        }
    }
    Ok(best)
}

/// Middle of interval `j` on the unwrapped axis.
pub fn interval_middle(free: &FreeIntervals, j: usize) -> f64 {
    let (lo, hi) = free.intervals[j];
    0.5 * (lo + hi)
}

/// Per-robot sampled-data state: the held command and its decision instant.
#[derive(Debug, Clone, Copy, Default)]
pub struct NaierState {
    held: Option<(u64, ControlInput, Option<f64>)>,
}

impl NaierState {
    /// The command still held from the current decision window, if any.
    /// `tick_time` is the control-loop time; a new decision is due when it
    /// reaches the next multiple of the decision period (within half a
    /// control period).
    pub fn held_command(
        &self,
        params: &NaierParams,
        tick_time: f64,
        control_period: f64,
    ) -> Option<ControlInput> {
        let k = (tick_time / params.decision_period + 0.5).floor() as u64;
        let at_decision = (tick_time - k as f64 * params.decision_period).abs()
            < 0.5 * control_period.min(params.decision_period);
        match self.held {
            Some((held_k, held, _)) if !at_decision || held_k == k => Some(held),
            _ => None,
        }
    }

    /// Decide at multiples of the decision period, hold in between.
    pub fn control(
        &mut self,
        scan: &SectorScan,
        params: &NaierParams,
        theta: f64,
        tick_time: f64,
        control_period: f64,
    ) -> Result<ControlInput, NavError> {
        if let Some(held) = self.held_command(params, tick_time, control_period) {
            return Ok(held);
        }
        let k = (tick_time / params.decision_period + 0.5).floor() as u64;
        let (command, commanded) = decide(scan, params, theta)?;
        self.held = Some((k, command, commanded));
        Ok(command)
    }

    /// Bearing commanded at the last decision (the interval middle), if any.
    pub fn commanded_bearing(&self) -> Option<f64> {
        self.held.and_then(|(_, _, c)| c)
    }
}

/// One decision: sign-steer toward the desired direction when the scan is
/// clear, else toward the middle of the nearest free interval. Speed is the
/// model's constant V = v_max.
pub fn decide(
    scan: &SectorScan,
    params: &NaierParams,
    theta: f64,
) -> Result<(ControlInput, Option<f64>), NavError> {
    let free = extract_intervals(scan);
    let v = params.limits.v_max;
    if free.blocked_flag == 0 {
        let u = params.limits.u_max * sign(params.desired_direction - theta);
        return Ok((ControlInput::new(v, u), None));
    }
    let j = nearest_interval(&free, theta)?;
    let middle = interval_middle(&free, j);
    let u = params.limits.u_max * sign(middle - theta);
    Ok((ControlInput::new(v, u), Some(middle)))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Minimum look-ahead diameter guaranteeing no collision with a point obstacle
/// over a horizon `t0` at mutual speed bound `v`.
pub fn min_disc_diameter_for_horizon(v: f64, t0: f64) -> f64 {
    assert!(t0 > 0.0, "horizon must be positive");
    2.0 * v * t0
}

/// Check the sampled-data feasibility inequalities, plus pairwise spacing of
/// the enlarged obstacles over `[0, duration]` and the rear-clearance
/// requirement at the initial pose.
pub fn validate_assumptions(
    params: &NaierParams,
    env: &Environment,
    initial_pose: Option<&crate::math::Pose>,
    duration: f64,
) -> ValidationReport {
    let mut report = ValidationReport::new("naier");
    let v = params.limits.v_max;
    let u_max = params.limits.u_max;
    let delta = params.decision_period;
    let d_s = params.disc_diameter;
    let v_e = params.environment_speed.max(env.max_obstacle_speed());

    let lhs1 = v * (u_max * delta).sin() / u_max;
    report.items.push(CheckItem::new(
        "Ase1: V sin(u_max d)/u_max > V_E d",
        lhs1 > v_e * delta,
        lhs1 - v_e * delta,
    ));
    report.items.push(CheckItem::new(
        "Ase2: D_s > 2(V + V_E) d",
        d_s > 2.0 * (v + v_e) * delta,
        d_s - 2.0 * (v + v_e) * delta,
    ));
    let lhs3 = (d_s - 2.0 * v * delta) * (u_max * delta).sin();
    report.items.push(CheckItem::new(
        "Ase3: (D_s - 2Vd) sin(u_max d) > 2 V_E d",
        lhs3 > 2.0 * v_e * delta,
        lhs3 - 2.0 * v_e * delta,
    ));
    let lhs4 = (d_s - 2.0 * v * delta) * (1.0 - (u_max * delta).cos());
    report.items.push(CheckItem::new(
        "Ase4: (D_s - 2Vd)(1 - cos(u_max d)) > 2 V_E d",
        lhs4 > 2.0 * v_e * delta,
        lhs4 - 2.0 * v_e * delta,
    ));

    // Pairwise spacing of the d_safe-enlarged obstacles, sampled over the run.
    let spacing_bound = d_s + 2.0 * v * delta;
    let dt = 0.1;
    let steps = (duration / dt).ceil() as usize;
    for i in 0..env.obstacles.len() {
        for j in (i + 1)..env.obstacles.len() {
            let mut min_dist = f64::INFINITY;
            for k in 0..=steps {
                let t = k as f64 * dt;
                let d = env.obstacles[i]
                    .placed_at(t)
                    .distance_to_shape(&env.obstacles[j].placed_at(t));
                // Each enlarged set grows by d_safe.
                min_dist = min_dist.min(d - 2.0 * env.d_safe);
            }
            report.items.push(CheckItem::new(
                format!(
                    "spacing: enlarged obstacles {}/{} > D_s + 2Vd",
                    env.obstacles[i].id, env.obstacles[j].id
                ),
                min_dist > spacing_bound,
                min_dist - spacing_bound,
            ));
        }
    }

    if let Some(pose) = initial_pose {
        let rear = pose.position() - pose.heading() * (2.0 * v * delta);
        let clear = env.enlarged_distance(0.0, rear) > 0.0
            && env.enlarged_distance(0.0, pose.position()) > 0.0;
        report.items.push(CheckItem::new(
            "rear clearance: no enlarged-environment point within 2Vd behind",
            clear,
            if clear { 1.0 } else { -1.0 },
        ));
        let initial_scan = crate::sensing::sense_sectors(env, 0.0, pose, d_s, params.resolution);
        if !initial_scan.all_free() {
            report
                .notes
                .push("initial scan is not clear; the clean-start assumption is violated".into());
        }
    }
    report
}
