//! Kinematic stage helpers: Raibert foot placement and swing interpolation.

use locodistill_sim::{Leg, RobotState, Simulator};

use crate::centroidal::MpcParams;
use crate::gait::GaitSchedule;
use crate::goal::GoalCommand;

/// Touchdown x target on the ground for a swinging leg:
/// hip projection + v_des * T_stance / 2 + k_raibert * (v_actual - v_des),
/// clamped to the leg's reachable span at the current hip height.
pub fn foot_placement(
    sim: &Simulator,
    state: &RobotState,
    goal: &GoalCommand,
    schedule: &GaitSchedule,
    params: &MpcParams,
    leg: Leg,
) -> f64 {
    let model = sim.model();
    let hip = [
        state.base_x
            + leg.hip_sign() * model.base_half_length * state.base_pitch.cos(),
        state.base_z + leg.hip_sign() * model.base_half_length * state.base_pitch.sin(),
    ];
    let v_actual = sim.com_velocity(state)[0];
    let raw = hip[0]
        + goal.v_des_x * schedule.stance_duration() / 2.0
        + params.k_raibert * (v_actual - goal.v_des_x);

    // Reachable span on the ground given the hip height.
    let max_reach = model.thigh_length + model.shank_length - 1e-3;
    let span = (max_reach * max_reach - hip[1] * hip[1]).max(0.0).sqrt();
    raw.clamp(hip[0] - span, hip[0] + span)
}

/// Swing foot position: cubic ease in x from start to target, plus a
/// half-sine arc of the configured height in z. Endpoints are exact.
pub fn swing_trajectory(
    swing_phase: f64,
    start: [f64; 2],
    target: [f64; 2],
    swing_height: f64,
) -> [f64; 2] {
    let s = swing_phase.clamp(0.0, 1.0);
    let ease = s * s * (3.0 - 2.0 * s);
    let x = start[0] + (target[0] - start[0]) * ease;
    let z_base = start[1] + (target[1] - start[1]) * ease;
    let arc = swing_height * (std::f64::consts::PI * s).sin();
    [x, z_base + arc]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use locodistill_sim::{sample_perturbed_init, PerturbationBounds, RobotModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn swing_endpoints_exact() {
        let start = [0.1, -0.002];
        let target = [0.18, 0.0];
        let p0 = swing_trajectory(0.0, start, target, 0.05);
        let p1 = swing_trajectory(1.0, start, target, 0.05);
        assert_eq!(p0, start);
        assert_relative_eq!(p1[0], target[0], epsilon = 1e-12);
        assert_relative_eq!(p1[1], target[1], epsilon = 1e-12);
    }

    #[test]
    fn swing_apex_is_swing_height() {
        let p = swing_trajectory(0.5, [0.0, 0.0], [0.1, 0.0], 0.05);
        assert_relative_eq!(p[1], 0.05, epsilon = 1e-12);
    }

    #[test]
    fn swing_is_continuous() {
        let start = [0.0, 0.0];
        let target = [0.12, 0.0];
        let height = 0.05;
        let samples = 100;
        let bound = 2.0 * (target[0] - start[0]).abs() / samples as f64
            + height * std::f64::consts::PI / samples as f64;
        let mut prev = swing_trajectory(0.0, start, target, height);
        for k in 1..=samples {
            let p = swing_trajectory(k as f64 / samples as f64, start, target, height);
            let step = ((p[0] - prev[0]).powi(2) + (p[1] - prev[1]).powi(2)).sqrt();
            assert!(step < bound, "step {step} exceeds bound {bound}");
            prev = p;
        }
    }

    #[test]
    fn placement_at_rest_is_hip_projection() {
        let sim = Simulator::new(RobotModel::default());
        let state = sim.model().nominal_state();
        let goal = GoalCommand::new(0.6, 0.0);
        let schedule = GaitSchedule::default();
        let params = MpcParams::default();
        for leg in Leg::BOTH {
            let target = foot_placement(&sim, &state, &goal, &schedule, &params, leg);
            let hip_x = state.base_x + leg.hip_sign() * sim.model().base_half_length;
            assert_relative_eq!(target, hip_x, epsilon = 1e-12);
        }
    }

    #[test]
    fn placement_formula_by_hand() {
        let sim = Simulator::new(RobotModel::default());
        let mut state = sim.model().nominal_state();
        // Give every body the same horizontal velocity so com vx is exact.
        state.base_vx = 0.3;
        let goal = GoalCommand::new(0.6, 0.3);
        let schedule = GaitSchedule::default();
        let params = MpcParams::default();
        // v_actual = v_des, so placement = hip + 0.3 * 0.15 / 2 = hip + 0.0225.
        let target = foot_placement(&sim, &state, &goal, &schedule, &params, Leg::Front);
        let hip_x = state.base_x + sim.model().base_half_length;
        assert_relative_eq!(target, hip_x + 0.0225, epsilon = 1e-12);
    }

    #[test]
    fn placement_always_within_reachable_span() {
        let sim = Simulator::new(RobotModel::default());
        let model = sim.model().clone();
        let nominal = model.nominal_state();
        let bounds = PerturbationBounds {
            max_base_vx_offset: 2.0,
            max_base_vz_offset: 1.0,
            max_pitch_offset: 0.3,
            max_pitch_rate_offset: 2.0,
            max_joint_offset: 0.3,
        };
        let schedule = GaitSchedule::default();
        let params = MpcParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let max_reach = model.thigh_length + model.shank_length - 1e-3;
        for case in 0..10_000 {
            let state = sample_perturbed_init(&mut rng, &model, &nominal, &bounds);
            let goal = GoalCommand::new(0.6, 0.3);
            for leg in Leg::BOTH {
                let target = foot_placement(&sim, &state, &goal, &schedule, &params, leg);
                let hip = [
                    state.base_x
                        + leg.hip_sign() * model.base_half_length * state.base_pitch.cos(),
                    state.base_z
                        + leg.hip_sign() * model.base_half_length * state.base_pitch.sin(),
                ];
                let dist = ((target - hip[0]).powi(2) + hip[1].powi(2)).sqrt();
                assert!(
                    dist <= max_reach + 1e-9,
                    "case {case}: target {dist} beyond reach {max_reach}"
                );
            }
        }
    }
}
