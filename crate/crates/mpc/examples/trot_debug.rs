//! Step-by-step trot diagnostic.

use locodistill_mpc::{GoalCommand, MpcExpert, PlanStatus};
use locodistill_sim::{Leg, RobotModel, Simulator};

fn main() {
    let sim = Simulator::new(RobotModel::default());
    let expert = MpcExpert::default();

    let mut state = sim.model().nominal_state();
    let goal0 = GoalCommand::new(0.0, 0.0);
    let mut session = expert.session(&sim, &state, &goal0);
    for step in 0..1500usize {
        let t = step as f64 * 1e-3;
        let goal = GoalCommand::at_time(t, 0.0, expert.schedule.gait_period, 0.0);
        if session.diverged(&state) {
            println!("DIVERGED at t={t:.3}");
            break;
        }
        let action = session.control(&sim, &state, &goal);
        let mut tau = sim.pd_torque(action.joint_targets, &state, expert.params.kp, expert.params.kd);
        for j in 0..4 {
            tau[j] += action.feedforward_torque[j];
        }
        match sim.step(&state, tau, [0.0; 2]) {
            Ok(next) => state = next,
            Err(e) => {
                println!("sim error at t={t:.3}: {e}");
                break;
            }
        }
        if step % 25 == 0 {
            let plan = session.current_plan().unwrap();
            let ok = plan.status == PlanStatus::Ok;
            let f0 = plan.nodes[0].force;
            let contact = sim.contact_forces(&state);
            let stance_f = expert.schedule.in_stance(goal.phase, Leg::Front);
            println!(
                "t={t:.3} ph={:.2} st={} z={:.3} th={:+.3} thd={:+.2} vx={:+.3} plan_f=[{:+.1},{:.1} | {:+.1},{:.1}] real=[{:+.1},{:.1} | {:+.1},{:.1}] ok={ok} tgt=[{:+.2} {:+.2} {:+.2} {:+.2}]",
                goal.phase,
                if stance_f { "F" } else { "B" },
                state.base_z, state.base_pitch, state.base_pitch_rate, state.base_vx,
                f0[0][0], f0[0][1], f0[1][0], f0[1][1],
                contact[0].force[0], contact[0].force[1],
                contact[1].force[0], contact[1].force[1],
                action.joint_targets[0], action.joint_targets[1],
                action.joint_targets[2], action.joint_targets[3],
            );
        }
    }
}
