//! Reactive collision-avoidance controllers for unicycle robots in dynamic
//! environments, a decentralized formation-building protocol, and the
//! scenario harness that runs and compares them.
//!
//! Three controllers are provided:
//! - [`bina`]: vision-cone avoidance with a constant avoiding angle,
//! - [`ena`]: range-only sliding-mode boundary following at a standoff distance,
//! - [`naier`]: sector-scan steering toward the nearest free bearing interval,
//!
//! plus [`formation`], a consensus-based formation builder with an anonymous
//! randomized slot-assignment variant. [`sim`] executes scenarios tick by
//! tick and extracts metrics; [`scenario`] parses the TOML scenario files.

pub mod bina;
pub mod ena;
pub mod error;
pub mod formation;
pub mod geometry;
pub mod math;
pub mod naier;
pub mod report;
pub mod scenario;
pub mod sensing;
pub mod sim;
pub mod world;

pub use math::{ControlInput, Pose, RobotLimits, Vec2};
