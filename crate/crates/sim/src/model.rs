//! Robot model parameters and the planar quadruped's geometric conventions.
//!
//! The robot lives in the sagittal x–z plane: x forward, z up. Base pitch is
//! measured counterclockwise in that plane, so positive pitch raises the
//! front hip. Each leg is a 2-link chain (thigh + shank) hanging from a hip
//! located `base_half_length` in front of / behind the base center along the
//! body axis. Leg joint angles are measured from the body's "down" direction:
//! at zero hip and knee the leg points straight down. A link at absolute
//! angle `a` (pitch + hip [+ knee]) points along `(sin a, -cos a)`.
//!
//! Joint order everywhere: `[front_hip, front_knee, back_hip, back_knee]`.
//! Positive front hip swings the front thigh forward; the front knee bends
//! backward (negative angles), the back leg mirrors both.

use serde::{Deserialize, Serialize};

use crate::state::RobotState;

/// Which leg of the planar model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    Front,
    Back,
}

impl Leg {
    pub const BOTH: [Leg; 2] = [Leg::Front, Leg::Back];

    /// Index into per-leg arrays (front = 0, back = 1).
    pub fn index(self) -> usize {
        match self {
            Leg::Front => 0,
            Leg::Back => 1,
        }
    }

    /// Sign of the hip offset along the body axis (+1 front, -1 back).
    pub fn hip_sign(self) -> f64 {
        match self {
            Leg::Front => 1.0,
            Leg::Back => -1.0,
        }
    }

    /// Index of the leg's hip in the joint vector.
    pub fn hip_joint(self) -> usize {
        self.index() * 2
    }

    /// Index of the leg's knee in the joint vector.
    pub fn knee_joint(self) -> usize {
        self.index() * 2 + 1
    }
}

/// Physical parameters of the planar quadruped and its contact model.
///
/// All units SI. `sim_dt` is fixed at 1 kHz; the contact model is a
/// penalty spring-damper with viscous tangential friction clamped to the
/// Coulomb cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotModel {
    pub base_mass: f64,
    pub base_inertia: f64,
    /// Hip offset from the base center along the body axis (m).
    pub base_half_length: f64,
    pub thigh_length: f64,
    pub shank_length: f64,
    pub thigh_mass: f64,
    pub shank_mass: f64,
    /// Viscous damping at each joint (N·m·s/rad).
    pub joint_damping: f64,
    /// Ground penalty spring stiffness (N/m).
    pub contact_stiffness: f64,
    /// Ground damping, used for both normal and tangential velocity (N·s/m).
    pub contact_damping: f64,
    pub friction_coeff: f64,
    pub gravity: f64,
    pub sim_dt: f64,
    /// Actuator torque limit (N·m), applied symmetrically.
    pub torque_limit: f64,
}

impl Default for RobotModel {
    fn default() -> Self {
        Self {
            base_mass: 1.8,
            base_inertia: 0.15,
            base_half_length: 0.2,
            thigh_length: 0.16,
            shank_length: 0.16,
            thigh_mass: 0.1,
            shank_mass: 0.1,
            joint_damping: 0.01,
            contact_stiffness: 1e4,
            contact_damping: 100.0,
            friction_coeff: 0.8,
            gravity: 9.81,
            sim_dt: 1e-3,
            torque_limit: 3.0,
        }
    }
}

impl RobotModel {
    /// Total robot mass (base plus four links).
    pub fn total_mass(&self) -> f64 {
        self.base_mass + 2.0 * (self.thigh_mass + self.shank_mass)
    }

    /// Validates the model invariants, returning the offending field name.
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("base_mass", self.base_mass),
            ("base_inertia", self.base_inertia),
            ("base_half_length", self.base_half_length),
            ("thigh_length", self.thigh_length),
            ("shank_length", self.shank_length),
            ("thigh_mass", self.thigh_mass),
            ("shank_mass", self.shank_mass),
            ("contact_stiffness", self.contact_stiffness),
            ("contact_damping", self.contact_damping),
            ("gravity", self.gravity),
            ("torque_limit", self.torque_limit),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(format!("{name} must be strictly positive, got {value}"));
            }
        }
        if self.joint_damping < 0.0 {
            return Err(format!(
                "joint_damping must be non-negative, got {}",
                self.joint_damping
            ));
        }
        if !(self.friction_coeff > 0.0 && self.friction_coeff <= 2.0) {
            return Err(format!(
                "friction_coeff must lie in (0, 2], got {}",
                self.friction_coeff
            ));
        }
        if (self.sim_dt - 1e-3).abs() > 1e-12 {
            return Err(format!("sim_dt is fixed at 1e-3 s, got {}", self.sim_dt));
        }
        Ok(())
    }

    /// Nominal standing joint angles: a symmetric, fairly extended crouch.
    pub fn nominal_joints(&self) -> [f64; 4] {
        [0.36, -0.72, -0.36, 0.72]
    }

    /// Vertical distance from hip to foot in the nominal configuration.
    pub fn nominal_leg_drop(&self) -> f64 {
        let q = self.nominal_joints();
        self.thigh_length * q[0].cos() + self.shank_length * (q[0] + q[1]).cos()
    }

    /// Nominal stance: base level, at rest, feet exactly on the ground.
    pub fn nominal_state(&self) -> RobotState {
        let mut state = RobotState {
            base_x: 0.0,
            base_z: self.nominal_leg_drop(),
            base_pitch: 0.0,
            base_vx: 0.0,
            base_vz: 0.0,
            base_pitch_rate: 0.0,
            joint_pos: self.nominal_joints(),
            joint_vel: [0.0; 4],
            foot_contact: [true, true],
            time: 0.0,
        };
        // Feet sit exactly at z = 0, which the contact model counts as touching.
        state.foot_contact = [true, true];
        state
    }
}

/// Safe joint ranges (rad) for the planar model, one `[lower, upper]` pair
/// per joint in joint order. These are the knee/hip rows of the safety
/// policy bounds; the knee-sign convention of the legs comes from here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

impl Default for JointLimits {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Self {
            lower: [0.0, -160.0 * deg, -90.0 * deg, 0.0],
            upper: [90.0 * deg, 0.0, 0.0, 160.0 * deg],
        }
    }
}

impl JointLimits {
    /// Clamps a joint vector into the safe ranges.
    pub fn clamp(&self, joints: [f64; 4]) -> [f64; 4] {
        let mut out = joints;
        for i in 0..4 {
            out[i] = out[i].clamp(self.lower[i], self.upper[i]);
        }
        out
    }

    /// True iff every joint lies inside its range (boundaries inclusive).
    pub fn contains(&self, joints: &[f64; 4]) -> bool {
        (0..4).all(|i| joints[i] >= self.lower[i] && joints[i] <= self.upper[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_model_is_valid() {
        assert!(RobotModel::default().validate().is_ok());
    }

    #[test]
    fn nominal_joints_inside_limits() {
        let model = RobotModel::default();
        let limits = JointLimits::default();
        assert!(limits.contains(&model.nominal_joints()));
    }

    #[test]
    fn validate_rejects_bad_friction() {
        let mut model = RobotModel::default();
        model.friction_coeff = 2.5;
        assert!(model.validate().unwrap_err().contains("friction_coeff"));
    }

    #[test]
    fn total_mass_sums_bodies() {
        let model = RobotModel::default();
        assert!((model.total_mass() - 2.2).abs() < 1e-12);
    }
}
