//! Range-only sliding-mode boundary following at a standoff distance.
//!
//! Avoidance drives the robot onto the sliding surface d-dot + chi(d - d0) = 0,
//! which settles the distance signal at the desired standoff d0 and makes the
//! robot track the d0-equidistant curve of the nearest obstacle group. The
//! controller consumes only the distance, its rate, and the target bearing.

use serde::{Deserialize, Serialize};

use crate::math::{ControlInput, RobotLimits};
use crate::sensing::RangeReading;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnaParams {
    /// Linear gain gamma (1/s) of the saturated correction.
    pub gain: f64,
    /// Saturation half-width delta (m); the saturation level is gain * delta.
    pub saturation_width: f64,
    /// Desired standoff distance d0 (m), above d_safe.
    pub standoff: f64,
    /// Avoidance trigger distance C (m), above d0 + exit_mismatch.
    pub trigger_distance: f64,
    /// Exit mismatch epsilon (m).
    pub exit_mismatch: f64,
    pub d_safe: f64,
    pub limits: RobotLimits,
}

impl EnaParams {
    /// Saturation level v_* = gamma * delta.
    pub fn saturation_level(&self) -> f64 {
        self.gain * self.saturation_width
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.gain <= 0.0 || self.saturation_width <= 0.0 {
            return Err("gain and saturation width must be positive".into());
        }
        if self.standoff <= self.d_safe {
            return Err("standoff d0 must exceed d_safe".into());
        }
        if self.trigger_distance <= self.standoff + self.exit_mismatch {
            return Err("trigger C must exceed d0 + epsilon".into());
        }
        // The sliding maneuver needs |d-dot| up to the saturation level; d-dot
        // is bounded by the relative speed, so cap v_* at v_max.
        if self.saturation_level() > self.limits.v_max {
            return Err(format!(
                "saturation level {} exceeds the reachable relative speed",
                self.saturation_level()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnaMode {
    Pursuit,
    Avoid,
}

/// Linear function with saturation: gamma*z inside |z| <= delta, else
/// +-gamma*delta.
pub fn chi(z: f64, gain: f64, saturation_width: f64) -> f64 {
    if z.abs() <= saturation_width {
        gain * z
    } else {
        gain * saturation_width * z.signum()
    }
}

/// Sliding-mode avoidance: u = u_max * sgn(d-dot + chi(d - d0)), sgn(0) = 0.
/// Speed is held at v_max so the relative speed stays well defined.
pub fn avoid_control(reading: &RangeReading, params: &EnaParams) -> ControlInput {
    let s = reading.rate
        + chi(
            reading.distance - params.standoff,
            params.gain,
            params.saturation_width,
        );
    let u = if s == 0.0 {
        0.0
    } else {
        params.limits.u_max * s.signum()
    };
    ControlInput::new(params.limits.v_max, u)
}

/// Same pursuit law as the vision-cone controller: steer to the target
/// bearing, then straight at full speed.
pub fn pursuit_control(limits: &RobotLimits, target_bearing: f64, theta: f64) -> ControlInput {
    crate::bina::pursuit_control(limits, target_bearing, theta)
}

/// Avoidance re-arms below this distance even without a fresh trigger
/// crossing (a pursuit segment blundering straight at an obstacle).
pub fn re_arm_floor(params: &EnaParams) -> f64 {
    (params.standoff - 3.0 * params.exit_mismatch).max(params.d_safe)
}

/// Switching: avoidance starts when the distance falls to the trigger C from
/// above (a downward crossing, so the post-exit pursuit segment is not
/// immediately recaptured), or drops to the re-arm floor; it ends once
/// d <= d0 + epsilon and the robot is oriented at the target (sampled as an
/// alignment event, see [`crate::bina::alignment_event`]).
pub fn switch_mode(
    mode: EnaMode,
    reading: &RangeReading,
    d_prev: f64,
    aligned: bool,
    params: &EnaParams,
) -> EnaMode {
    match mode {
        EnaMode::Pursuit => {
            let crossed =
                reading.distance <= params.trigger_distance && d_prev > params.trigger_distance;
            if crossed || reading.distance <= re_arm_floor(params) {
                EnaMode::Avoid
            } else {
                EnaMode::Pursuit
            }
        }
        EnaMode::Avoid => {
            // Disengage when the obstacle has left the trigger zone again.
            if reading.distance >= params.trigger_distance
                || (reading.distance <= params.standoff + params.exit_mismatch && aligned)
            {
                EnaMode::Pursuit
            } else {
                EnaMode::Avoid
            }
        }
    }
}
