//! Planar vectors, angle arithmetic, unicycle kinematics and the
//! differential-drive mapping shared by every controller.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::KinematicsError;

/// A 2D vector in meters (or m/s when used as a velocity).
/// Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Serialize for Vec2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vec2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(serde::de::Error::custom("vector components must be finite"));
        }
        Ok(Vec2 { x, y })
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector pointing along `angle` (radians from the x-axis, CCW).
    pub fn from_angle(angle: f64) -> Self {
        Vec2::new(angle.cos(), angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; positive when `other` is CCW of `self`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Bearing of this vector, in (-pi, pi].
    pub fn angle(self) -> f64 {
        wrap_angle(self.y.atan2(self.x))
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize a zero vector");
        Vec2::new(self.x / n, self.y / n)
    }

    /// Rotate CCW by `angle` radians.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Perpendicular vector (self rotated +90 degrees).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Robot configuration: position plus heading, theta kept in (-pi, pi].
/// Serialized as a three-element array `[x, y, theta]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.theta].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, theta] = <[f64; 3]>::deserialize(d)?;
        if !(x.is_finite() && y.is_finite() && theta.is_finite()) {
            return Err(serde::de::Error::custom("pose components must be finite"));
        }
        Ok(Pose::new(x, y, theta))
    }
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Unit vector along the current heading.
    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Hard bounds on a robot's speed and angular velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotLimits {
    /// Lowest allowed forward speed (m/s, >= 0).
    #[serde(default)]
    pub v_min: f64,
    /// Highest allowed forward speed (m/s).
    pub v_max: f64,
    /// Angular velocity bound (rad/s); commands live in [-u_max, u_max].
    pub u_max: f64,
}

impl RobotLimits {
    pub fn new(v_min: f64, v_max: f64, u_max: f64) -> Result<Self, KinematicsError> {
        if !(v_min >= 0.0 && v_min < v_max && u_max > 0.0) {
            return Err(KinematicsError::InvalidLimits {
                v_min,
                v_max,
                u_max,
            });
        }
        Ok(RobotLimits {
            v_min,
            v_max,
            u_max,
        })
    }

    pub fn contains(&self, c: ControlInput) -> bool {
        c.v >= self.v_min - 1e-12 && c.v <= self.v_max + 1e-12 && c.u.abs() <= self.u_max + 1e-12
    }

    /// Clamp a command into the admissible box.
    pub fn clamp(&self, c: ControlInput) -> ControlInput {
        ControlInput {
            v: c.v.clamp(self.v_min, self.v_max),
            u: c.u.clamp(-self.u_max, self.u_max),
        }
    }
}

/// A (speed, angular velocity) command pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub v: f64,
    pub u: f64,
}

impl ControlInput {
    pub fn new(v: f64, u: f64) -> Self {
        ControlInput { v, u }
    }
}

/// Differential-drive geometry: half axle length, wheel radius, wheel speed bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffDriveParams {
    /// Half the axle length L (m).
    pub axle_half_length: f64,
    /// Driving wheel radius (m).
    pub wheel_radius: f64,
    /// Wheel angular speed bound Omega (rad/s).
    pub wheel_speed_limit: f64,
}

impl DiffDriveParams {
    pub fn new(
        axle_half_length: f64,
        wheel_radius: f64,
        wheel_speed_limit: f64,
    ) -> Result<Self, KinematicsError> {
        if axle_half_length <= 0.0 || wheel_radius <= 0.0 || wheel_speed_limit <= 0.0 {
            return Err(KinematicsError::InvalidDiffDrive);
        }
        Ok(DiffDriveParams {
            axle_half_length,
            wheel_radius,
            wheel_speed_limit,
        })
    }
}

/// Wrap an angle to (-pi, pi]. The boundary is kept closed at +pi.
pub fn wrap_angle(a: f64) -> f64 {
    assert!(a.is_finite(), "wrap_angle: non-finite input {a}");
    if a > -PI && a <= PI {
        // Already in range; avoid rem_euclid rounding on the identity path.
        return a;
    }
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// CCW angle gamma(r1, r2) in (-pi, pi] taking r1's direction to r2's direction.
pub fn ccw_angle_from_to(r1: Vec2, r2: Vec2) -> f64 {
    assert!(
        r1.norm_squared() > 0.0 && r2.norm_squared() > 0.0,
        "ccw_angle_from_to: zero vector"
    );
    let a = r1.cross(r2).atan2(r1.dot(r2));
    // atan2 returns -pi for the antiparallel case; the convention here is +pi.
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Sign of the CCW rotation from r1 to r2: 0 when aligned, +1 for CCW turns
/// up to and including pi, -1 for CW turns.
pub fn turn_sign(r1: Vec2, r2: Vec2) -> i8 {
    let g = ccw_angle_from_to(r1, r2);
    if g == 0.0 {
        0
    } else if g > 0.0 {
        1
    } else {
        -1
    }
}

/// Lower bound on the turning radius at speed `v` under angular bound `u_max`.
pub fn min_turn_radius(v: f64, u_max: f64) -> f64 {
    assert!(u_max > 0.0, "min_turn_radius: u_max must be positive");
    assert!(v >= 0.0, "min_turn_radius: negative speed");
    v / u_max
}

/// One sample-and-hold integration step of the unicycle model.
///
/// (v, u) are held constant over `dt`; the update is the exact circular arc
/// when u != 0 and the exact straight line when u == 0.
pub fn integrate_step(p: Pose, c: ControlInput, dt: f64) -> Pose {
    assert!(dt > 0.0, "integrate_step: dt must be positive");
    let ControlInput { v, u } = c;
    if u == 0.0 {
        return Pose::new(
            p.x + v * dt * p.theta.cos(),
            p.y + v * dt * p.theta.sin(),
            p.theta,
        );
    }
    let theta1 = p.theta + u * dt;
    if (u * dt).abs() < 1e-8 {
        // Arc formula degrades numerically for tiny turns; the midpoint chord
        // is exact to O((u dt)^3) which is below f64 noise here.
        let mid = p.theta + 0.5 * u * dt;
        return Pose::new(p.x + v * dt * mid.cos(), p.y + v * dt * mid.sin(), theta1);
    }
    let r = v / u;
    Pose::new(
        p.x + r * (theta1.sin() - p.theta.sin()),
        p.y - r * (theta1.cos() - p.theta.cos()),
        theta1,
    )
}

/// Map a unicycle command to (left, right) wheel angular velocities.
///
/// Fails when |v| + L|u| exceeds the wheel-rim speed budget R_w * Omega,
/// reporting the violation margin.
pub fn diff_drive_from_unicycle(
    c: ControlInput,
    p: &DiffDriveParams,
) -> Result<(f64, f64), KinematicsError> {
    let budget = p.wheel_radius * p.wheel_speed_limit;
    let demand = c.v.abs() + p.axle_half_length * c.u.abs();
    if demand > budget + 1e-12 {
        return Err(KinematicsError::WheelBudgetExceeded {
            margin: demand - budget,
        });
    }
    let wr = (c.v + p.axle_half_length * c.u) / p.wheel_radius;
    let wl = (c.v - p.axle_half_length * c.u) / p.wheel_radius;
    Ok((wl, wr))
}

/// Inverse of [`diff_drive_from_unicycle`].
pub fn unicycle_from_diff_drive(wl: f64, wr: f64, p: &DiffDriveParams) -> ControlInput {
    let vl = p.wheel_radius * wl;
    let vr = p.wheel_radius * wr;
    ControlInput::new((vl + vr) / 2.0, (vr - vl) / (2.0 * p.axle_half_length))
}

/// Turning-radius floor of a differential-drive platform at speed `v`:
/// the wheel-rim budget R_w * Omega couples speed and turn rate, giving
/// R = L |v| / (V - |v|).
pub fn diff_drive_min_turn_radius(v: f64, p: &DiffDriveParams) -> f64 {
    let budget = p.wheel_radius * p.wheel_speed_limit;
    assert!(v.abs() < budget, "speed must stay below the rim budget");
    p.axle_half_length * v.abs() / (budget - v.abs())
}
