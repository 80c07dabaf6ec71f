//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("invalid robot limits: v_min={v_min}, v_max={v_max}, u_max={u_max}")]
    InvalidLimits { v_min: f64, v_max: f64, u_max: f64 },
    #[error("differential-drive parameters must be strictly positive")]
    InvalidDiffDrive,
    #[error("wheel speed budget exceeded by {margin} m/s")]
    WheelBudgetExceeded { margin: f64 },
}

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("vision cone undefined: robot position lies inside the obstacle group")]
    InsideObstacle,
}

#[derive(Debug, Error)]
pub enum NavError {
    #[error("no free bearing interval: scan fully blocked")]
    Blocked,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("numerical instability at t={t}: non-finite robot state (robot {robot})")]
    NonFinite { t: f64, robot: usize },
    #[error("scenario error: {0}")]
    Scenario(#[from] ScenarioError),
}
