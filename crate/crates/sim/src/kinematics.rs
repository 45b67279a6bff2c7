//! Closed-form planar kinematics: hips, feet, Jacobians, CoM, and 2-link IK.

use crate::error::SimError;
use crate::model::{Leg, RobotModel};
use crate::state::RobotState;

/// Direction of a link at absolute angle `a` (zero points straight down).
#[inline]
pub fn link_dir(a: f64) -> [f64; 2] {
    [a.sin(), -a.cos()]
}

/// Derivative of [`link_dir`] with respect to the angle.
#[inline]
pub fn link_dir_deriv(a: f64) -> [f64; 2] {
    [a.cos(), a.sin()]
}

/// Body-axis direction at pitch `theta`.
#[inline]
pub fn body_axis(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

/// World position of a leg's hip.
pub fn hip_world(model: &RobotModel, state: &RobotState, leg: Leg) -> [f64; 2] {
    let axis = body_axis(state.base_pitch);
    let offset = leg.hip_sign() * model.base_half_length;
    [
        state.base_x + offset * axis[0],
        state.base_z + offset * axis[1],
    ]
}

/// World position of a leg's foot point.
pub fn foot_world(model: &RobotModel, state: &RobotState, leg: Leg) -> [f64; 2] {
    let hip = hip_world(model, state, leg);
    let q_hip = state.joint_pos[leg.hip_joint()];
    let q_knee = state.joint_pos[leg.knee_joint()];
    let a1 = state.base_pitch + q_hip;
    let a2 = a1 + q_knee;
    let d1 = link_dir(a1);
    let d2 = link_dir(a2);
    [
        hip[0] + model.thigh_length * d1[0] + model.shank_length * d2[0],
        hip[1] + model.thigh_length * d1[1] + model.shank_length * d2[1],
    ]
}

/// 2x2 Jacobian of the foot position with respect to the leg's own joints,
/// columns ordered (hip, knee). Expressed in world coordinates.
pub fn foot_jacobian(model: &RobotModel, state: &RobotState, leg: Leg) -> [[f64; 2]; 2] {
    let q_hip = state.joint_pos[leg.hip_joint()];
    let q_knee = state.joint_pos[leg.knee_joint()];
    let a1 = state.base_pitch + q_hip;
    let a2 = a1 + q_knee;
    let d1 = link_dir_deriv(a1);
    let d2 = link_dir_deriv(a2);
    let t = model.thigh_length;
    let s = model.shank_length;
    // Columns are d(foot)/d(hip) and d(foot)/d(knee); rows are x, z.
    [
        [t * d1[0] + s * d2[0], s * d2[0]],
        [t * d1[1] + s * d2[1], s * d2[1]],
    ]
}

/// World velocity of a leg's foot point.
pub fn foot_velocity(model: &RobotModel, state: &RobotState, leg: Leg) -> [f64; 2] {
    let q_hip = state.joint_pos[leg.hip_joint()];
    let q_knee = state.joint_pos[leg.knee_joint()];
    let a1 = state.base_pitch + q_hip;
    let a2 = a1 + q_knee;
    let a1_dot = state.base_pitch_rate + state.joint_vel[leg.hip_joint()];
    let a2_dot = a1_dot + state.joint_vel[leg.knee_joint()];
    let d1 = link_dir_deriv(a1);
    let d2 = link_dir_deriv(a2);
    let axis_deriv = [-state.base_pitch.sin(), state.base_pitch.cos()];
    let offset = leg.hip_sign() * model.base_half_length;
    let t = model.thigh_length;
    let s = model.shank_length;
    [
        state.base_vx
            + offset * axis_deriv[0] * state.base_pitch_rate
            + t * d1[0] * a1_dot
            + s * d2[0] * a2_dot,
        state.base_vz
            + offset * axis_deriv[1] * state.base_pitch_rate
            + t * d1[1] * a1_dot
            + s * d2[1] * a2_dot,
    ]
}

/// Whole-robot center of mass in world coordinates.
pub fn com_position(model: &RobotModel, state: &RobotState) -> [f64; 2] {
    let mut sum = [
        model.base_mass * state.base_x,
        model.base_mass * state.base_z,
    ];
    for leg in Leg::BOTH {
        let hip = hip_world(model, state, leg);
        let a1 = state.base_pitch + state.joint_pos[leg.hip_joint()];
        let a2 = a1 + state.joint_pos[leg.knee_joint()];
        let d1 = link_dir(a1);
        let d2 = link_dir(a2);
        let t = model.thigh_length;
        let s = model.shank_length;
        let thigh_com = [hip[0] + 0.5 * t * d1[0], hip[1] + 0.5 * t * d1[1]];
        let shank_com = [
            hip[0] + t * d1[0] + 0.5 * s * d2[0],
            hip[1] + t * d1[1] + 0.5 * s * d2[1],
        ];
        sum[0] += model.thigh_mass * thigh_com[0] + model.shank_mass * shank_com[0];
        sum[1] += model.thigh_mass * thigh_com[1] + model.shank_mass * shank_com[1];
    }
    let m = model.total_mass();
    [sum[0] / m, sum[1] / m]
}

/// Whole-robot center-of-mass velocity in world coordinates.
pub fn com_velocity(model: &RobotModel, state: &RobotState) -> [f64; 2] {
    let mut sum = [
        model.base_mass * state.base_vx,
        model.base_mass * state.base_vz,
    ];
    let axis_deriv = [-state.base_pitch.sin(), state.base_pitch.cos()];
    for leg in Leg::BOTH {
        let offset = leg.hip_sign() * model.base_half_length;
        let hip_vel = [
            state.base_vx + offset * axis_deriv[0] * state.base_pitch_rate,
            state.base_vz + offset * axis_deriv[1] * state.base_pitch_rate,
        ];
        let a1 = state.base_pitch + state.joint_pos[leg.hip_joint()];
        let a2 = a1 + state.joint_pos[leg.knee_joint()];
        let a1_dot = state.base_pitch_rate + state.joint_vel[leg.hip_joint()];
        let a2_dot = a1_dot + state.joint_vel[leg.knee_joint()];
        let d1 = link_dir_deriv(a1);
        let d2 = link_dir_deriv(a2);
        let t = model.thigh_length;
        let s = model.shank_length;
        let thigh_vel = [
            hip_vel[0] + 0.5 * t * d1[0] * a1_dot,
            hip_vel[1] + 0.5 * t * d1[1] * a1_dot,
        ];
        let shank_vel = [
            hip_vel[0] + t * d1[0] * a1_dot + 0.5 * s * d2[0] * a2_dot,
            hip_vel[1] + t * d1[1] * a1_dot + 0.5 * s * d2[1] * a2_dot,
        ];
        sum[0] += model.thigh_mass * thigh_vel[0] + model.shank_mass * shank_vel[0];
        sum[1] += model.thigh_mass * thigh_vel[1] + model.shank_mass * shank_vel[1];
    }
    let m = model.total_mass();
    [sum[0] / m, sum[1] / m]
}

/// Foot position of a leg expressed in the base frame relative to its hip.
/// This is the coordinate system [`inverse_kinematics`] works in.
pub fn foot_rel_hip(model: &RobotModel, state: &RobotState, leg: Leg) -> [f64; 2] {
    let hip = hip_world(model, state, leg);
    let foot = foot_world(model, state, leg);
    let dx = foot[0] - hip[0];
    let dz = foot[1] - hip[1];
    // Rotate world offset back by the pitch angle into the base frame.
    let (sin_p, cos_p) = state.base_pitch.sin_cos();
    [cos_p * dx + sin_p * dz, -sin_p * dx + cos_p * dz]
}

/// Closed-form 2-link inverse kinematics.
///
/// `target` is the desired foot position relative to the hip in the base
/// frame. The knee-bend branch is fixed per leg: front knees bend backward
/// (knee <= 0), back knees forward (knee >= 0). Targets outside the
/// reachable annulus are an error; callers are expected to clamp first.
pub fn inverse_kinematics(
    model: &RobotModel,
    target: [f64; 2],
    leg: Leg,
) -> Result<(f64, f64), SimError> {
    let t = model.thigh_length;
    let s = model.shank_length;
    let r2 = target[0] * target[0] + target[1] * target[1];
    let r = r2.sqrt();
    let slack = 1e-12;
    if r > t + s + slack || r < (t - s).abs() - slack {
        return Err(SimError::OutOfReach {
            target,
            radius: r,
            annulus: ((t - s).abs(), t + s),
        });
    }
    let cos_knee = ((r2 - t * t - s * s) / (2.0 * t * s)).clamp(-1.0, 1.0);
    let knee_mag = cos_knee.acos();
    let knee = match leg {
        Leg::Front => -knee_mag,
        Leg::Back => knee_mag,
    };
    let beta = target[0].atan2(-target[1]);
    let hip = beta - (s * knee.sin()).atan2(t + s * knee.cos());
    Ok((hip, knee))
}

/// Pulls a relative foot target inside the reachable annulus, leaving a
/// small margin so IK stays well-conditioned.
pub fn clamp_to_annulus(model: &RobotModel, target: [f64; 2], margin: f64) -> [f64; 2] {
    let t = model.thigh_length;
    let s = model.shank_length;
    let r_min = (t - s).abs() + margin;
    let r_max = t + s - margin;
    let r = (target[0] * target[0] + target[1] * target[1]).sqrt();
    if r < 1e-12 {
        // Degenerate target at the hip: point straight down at minimum reach.
        return [0.0, -r_min];
    }
    let clamped = r.clamp(r_min, r_max);
    [target[0] * clamped / r, target[1] * clamped / r]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> RobotModel {
        RobotModel::default()
    }

    fn state_with(joints: [f64; 4], pitch: f64) -> RobotState {
        let mut s = model().nominal_state();
        s.joint_pos = joints;
        s.base_pitch = pitch;
        s
    }

    #[test]
    fn stretched_leg_points_straight_down() {
        let m = model();
        let s = state_with([0.0; 4], 0.0);
        for leg in Leg::BOTH {
            let hip = hip_world(&m, &s, leg);
            let foot = foot_world(&m, &s, leg);
            assert_relative_eq!(foot[0], hip[0], epsilon = 1e-12);
            assert_relative_eq!(
                hip[1] - foot[1],
                m.thigh_length + m.shank_length,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-7;
        for _ in 0..200 {
            let joints = [
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.5..1.5),
            ];
            let pitch = rng.gen_range(-0.5..0.5);
            let s = state_with(joints, pitch);
            for leg in Leg::BOTH {
                let jac = foot_jacobian(&m, &s, leg);
                for (col, joint_idx) in [(0, leg.hip_joint()), (1, leg.knee_joint())] {
                    let mut plus = s;
                    plus.joint_pos[joint_idx] += h;
                    let mut minus = s;
                    minus.joint_pos[joint_idx] -= h;
                    let fp = foot_world(&m, &plus, leg);
                    let fm = foot_world(&m, &minus, leg);
                    for row in 0..2 {
                        let fd = (fp[row] - fm[row]) / (2.0 * h);
                        assert!(
                            (jac[row][col] - fd).abs() < 1e-6,
                            "leg {leg:?} row {row} col {col}: {} vs {}",
                            jac[row][col],
                            fd
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn fk_ik_round_trip() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = m.thigh_length;
        let s = m.shank_length;
        for _ in 0..1000 {
            let r = rng.gen_range((t - s).abs() + 1e-3..t + s - 1e-3);
            let angle = rng.gen_range(-1.3..1.3_f64);
            for leg in Leg::BOTH {
                let target = [r * angle.sin(), -r * angle.cos()];
                let (hip, knee) = inverse_kinematics(&m, target, leg).unwrap();
                let mut st = state_with([0.0; 4], 0.0);
                st.joint_pos[leg.hip_joint()] = hip;
                st.joint_pos[leg.knee_joint()] = knee;
                let rel = foot_rel_hip(&m, &st, leg);
                assert!(
                    (rel[0] - target[0]).abs() < 1e-9 && (rel[1] - target[1]).abs() < 1e-9,
                    "round trip failed: {target:?} vs {rel:?}"
                );
            }
        }
    }

    #[test]
    fn ik_full_extension_is_zero_angles() {
        let m = model();
        let target = [0.0, -(m.thigh_length + m.shank_length)];
        for leg in Leg::BOTH {
            let (hip, knee) = inverse_kinematics(&m, target, leg).unwrap();
            assert_relative_eq!(hip, 0.0, epsilon = 1e-9);
            assert_relative_eq!(knee, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn ik_law_of_cosines() {
        let m = model();
        // ||p|| equal to one link length; knee angle must satisfy the
        // law-of-cosines identity for the triangle (thigh, shank, p).
        let r = m.thigh_length;
        let target = [0.3 * r, -(r * r - (0.3 * r) * (0.3 * r)).sqrt()];
        let (_, knee) = inverse_kinematics(&m, target, Leg::Front).unwrap();
        let r2 = target[0] * target[0] + target[1] * target[1];
        let expected_cos =
            (r2 - m.thigh_length * m.thigh_length - m.shank_length * m.shank_length)
                / (2.0 * m.thigh_length * m.shank_length);
        assert_relative_eq!(knee.cos(), expected_cos, epsilon = 1e-9);
        assert!(knee <= 0.0, "front knee sign convention violated");
    }

    #[test]
    fn ik_mirror_symmetry() {
        let m = model();
        let target_front = [0.08, -0.25];
        let target_back = [-0.08, -0.25];
        let (hip_f, knee_f) = inverse_kinematics(&m, target_front, Leg::Front).unwrap();
        let (hip_b, knee_b) = inverse_kinematics(&m, target_back, Leg::Back).unwrap();
        assert_relative_eq!(hip_f, -hip_b, epsilon = 1e-12);
        assert_relative_eq!(knee_f, -knee_b, epsilon = 1e-12);
    }

    #[test]
    fn ik_out_of_reach_errors() {
        let m = model();
        let err = inverse_kinematics(&m, [0.0, -0.5], Leg::Front);
        assert!(matches!(err, Err(SimError::OutOfReach { .. })));
    }

    #[test]
    fn annulus_clamp_brings_targets_in_reach() {
        let m = model();
        let clamped = clamp_to_annulus(&m, [0.0, -0.5], 1e-3);
        assert!(inverse_kinematics(&m, clamped, Leg::Front).is_ok());
        let r = (clamped[0] * clamped[0] + clamped[1] * clamped[1]).sqrt();
        assert_relative_eq!(r, m.thigh_length + m.shank_length - 1e-3, epsilon = 1e-12);
    }

    #[test]
    fn com_velocity_matches_finite_differences() {
        let m = model();
        let mut s = state_with([0.4, -0.9, -0.3, 0.8], 0.1);
        s.base_vx = 0.3;
        s.base_vz = -0.2;
        s.base_pitch_rate = 0.7;
        s.joint_vel = [0.5, -0.4, 0.2, -0.6];
        let h = 1e-7;
        let mut plus = s;
        plus.base_x += h * s.base_vx;
        plus.base_z += h * s.base_vz;
        plus.base_pitch += h * s.base_pitch_rate;
        for i in 0..4 {
            plus.joint_pos[i] += h * s.joint_vel[i];
        }
        let c0 = com_position(&m, &s);
        let c1 = com_position(&m, &plus);
        let v = com_velocity(&m, &s);
        assert_relative_eq!((c1[0] - c0[0]) / h, v[0], epsilon = 1e-5);
        assert_relative_eq!((c1[1] - c0[1]) / h, v[1], epsilon = 1e-5);
    }
}
