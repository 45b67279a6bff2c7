//! Closed-loop probe for expert tuning: runs the expert at several commanded
//! velocities and prints stability metrics.

use locodistill_mpc::{expert_rollout, MpcExpert};
use locodistill_sim::{RobotModel, Simulator};

fn main() {
    let sim = Simulator::new(RobotModel::default());
    let expert = MpcExpert::default();

    for v_des in [0.0, 0.15, 0.3] {
        let start = sim.model().nominal_state();
        let rollout = expert_rollout(&sim, &expert, &start, 0.0, v_des, 5.0, None);
        let n = rollout.states.len();
        let steady: Vec<_> = rollout.states.iter().skip(n / 5).collect();
        let mean_vx: f64 = steady.iter().map(|s| s.base_vx).sum::<f64>() / steady.len() as f64;
        let mean_z: f64 = steady.iter().map(|s| s.base_z).sum::<f64>() / steady.len() as f64;
        let max_pitch = rollout
            .states
            .iter()
            .map(|s| s.base_pitch.abs())
            .fold(0.0f64, f64::max);
        let max_pitch_rate = rollout
            .states
            .iter()
            .map(|s| s.base_pitch_rate.abs())
            .fold(0.0f64, f64::max);
        let min_z = rollout.states.iter().map(|s| s.base_z).fold(f64::MAX, f64::min);
        let last = rollout.states.last().unwrap();
        println!(
            "v_des={v_des:.2} diverged={} steps={} mean_vx={mean_vx:+.3} mean_z={mean_z:.3} min_z={min_z:.3} max|pitch|={max_pitch:.3} max|rate|={max_pitch_rate:.2} x_end={:+.3}",
            rollout.diverged,
            n - 1,
            last.base_x
        );
    }
}
