//! Simulator state and the policy-facing observation.

use serde::{Deserialize, Serialize};

/// Full planar simulator state.
///
/// `foot_contact[i]` is true iff foot `i` has non-negative penetration under
/// the contact model (foot height <= 0). Joint order is
/// `[front_hip, front_knee, back_hip, back_knee]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub base_x: f64,
    pub base_z: f64,
    pub base_pitch: f64,
    pub base_vx: f64,
    pub base_vz: f64,
    pub base_pitch_rate: f64,
    pub joint_pos: [f64; 4],
    pub joint_vel: [f64; 4],
    pub foot_contact: [bool; 2],
    pub time: f64,
}

impl RobotState {
    /// True iff every numeric entry is finite.
    pub fn is_finite(&self) -> bool {
        let scalars = [
            self.base_x,
            self.base_z,
            self.base_pitch,
            self.base_vx,
            self.base_vz,
            self.base_pitch_rate,
            self.time,
        ];
        scalars.iter().all(|v| v.is_finite())
            && self.joint_pos.iter().all(|v| v.is_finite())
            && self.joint_vel.iter().all(|v| v.is_finite())
    }

    /// Generalized position vector `[x, z, pitch, q1..q4]`.
    pub fn q(&self) -> [f64; 7] {
        [
            self.base_x,
            self.base_z,
            self.base_pitch,
            self.joint_pos[0],
            self.joint_pos[1],
            self.joint_pos[2],
            self.joint_pos[3],
        ]
    }

    /// Generalized velocity vector matching [`RobotState::q`].
    pub fn qdot(&self) -> [f64; 7] {
        [
            self.base_vx,
            self.base_vz,
            self.base_pitch_rate,
            self.joint_vel[0],
            self.joint_vel[1],
            self.joint_vel[2],
            self.joint_vel[3],
        ]
    }
}

/// Number of entries in an [`Observation`].
pub const OBSERVATION_DIM: usize = 16;

/// Policy observation: a fixed 16-entry vector with no absolute horizontal
/// position, so observations are invariant to translation along x.
///
/// Layout: `[pitch, vx, vz, pitch_rate, joint_pos[4], joint_vel[4],
/// front_foot_dx, front_foot_dz, back_foot_dx, back_foot_dz]` where the
/// foot entries are world foot positions relative to the whole-robot CoM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub [f64; OBSERVATION_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}
