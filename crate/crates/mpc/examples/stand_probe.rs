//! Diagnostic: expert holding double stance (near-unit stance fraction).

use locodistill_mpc::{GaitSchedule, GoalCommand, MpcExpert};
use locodistill_sim::{RobotModel, Simulator};

fn main() {
    let sim = Simulator::new(RobotModel::default());
    let mut expert = MpcExpert::default();
    expert.schedule = GaitSchedule {
        stance_fraction: 0.99,
        phase_offset: [0.0, 0.0],
        ..GaitSchedule::default()
    };

    let mut state = sim.model().nominal_state();
    let goal = GoalCommand::new(0.0, 0.0);
    let mut session = expert.session(&sim, &state, &goal);
    for step in 0..2000usize {
        let t = step as f64 * 1e-3;
        let goal = GoalCommand::at_time(t, 0.0, expert.schedule.gait_period, 0.0);
        let action = session.control(&sim, &state, &goal);
        let mut tau = sim.pd_torque(action.joint_targets, &state, expert.params.kp, expert.params.kd);
        for j in 0..4 {
            tau[j] += action.feedforward_torque[j];
        }
        state = sim.step(&state, tau, [0.0; 2]).unwrap();
        if step % 200 == 0 {
            let plan = session.current_plan().unwrap();
            let f0 = plan.nodes[0].force;
            let contact = sim.contact_forces(&state);
            println!(
                "t={t:.2} z={:.4} pitch={:+.4} vx={:+.4} tgt=[{:+.3} {:+.3}] ff=[{:+.3} {:+.3} {:+.3} {:+.3}] plan_fz=[{:.1} {:.1}] real_fz=[{:.1} {:.1}]",
                state.base_z, state.base_pitch, state.base_vx,
                action.joint_targets[0], action.joint_targets[1],
                action.feedforward_torque[0], action.feedforward_torque[1],
                action.feedforward_torque[2], action.feedforward_torque[3],
                f0[0][1], f0[1][1],
                contact[0].force[1], contact[1].force[1],
            );
        }
    }
    println!("final z={:.4} pitch={:+.4}", state.base_z, state.base_pitch);
}
