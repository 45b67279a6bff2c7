//! Goal command: gait phase plus commanded forward velocity.

use serde::{Deserialize, Serialize};

use crate::gait::frac;

/// The goal supplied to both the expert and the policy at every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalCommand {
    /// Position within the gait cycle, [0, 1).
    pub phase: f64,
    /// Desired forward CoM velocity (m/s).
    pub v_des_x: f64,
}

impl GoalCommand {
    pub fn new(phase: f64, v_des_x: f64) -> Self {
        Self {
            phase: frac(phase),
            v_des_x,
        }
    }

    /// Goal at time `t` of a rollout with a fixed commanded velocity.
    pub fn at_time(t: f64, phase0: f64, gait_period: f64, v_des_x: f64) -> Self {
        Self::new(phase0 + t / gait_period, v_des_x)
    }

    /// Network encoding: the phase as (sin, cos) to remove the wrap
    /// discontinuity, then the commanded velocity.
    pub fn encode(&self) -> [f64; 3] {
        let angle = 2.0 * std::f64::consts::PI * self.phase;
        [angle.sin(), angle.cos(), self.v_des_x]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn encoding_is_continuous_across_wrap() {
        let before = GoalCommand::new(0.999, 0.2).encode();
        let after = GoalCommand::new(0.001, 0.2).encode();
        assert!((before[0] - after[0]).abs() < 0.02);
        assert!((before[1] - after[1]).abs() < 0.001);
    }

    #[test]
    fn at_time_advances_phase() {
        let goal = GoalCommand::at_time(0.15, 0.0, 0.3, 0.1);
        assert_relative_eq!(goal.phase, 0.5, epsilon = 1e-12);
    }
}
