use thiserror::Error;

use crate::state::RobotState;

/// Errors surfaced by the simulator.
#[derive(Debug, Clone, Error)]
pub enum SimError {
    /// Integration produced a non-finite state; carries the offending state.
    #[error("simulation diverged to a non-finite state at t = {}", .state.time)]
    Diverged { state: Box<RobotState> },

    /// An IK target outside the reachable annulus.
    #[error(
        "foot target ({}, {}) at radius {radius:.4} outside reachable annulus [{}, {}]",
        target[0], target[1], annulus.0, annulus.1
    )]
    OutOfReach {
        target: [f64; 2],
        radius: f64,
        annulus: (f64, f64),
    },

    /// Inputs violated an operation's contract (non-finite torques etc.).
    #[error("contract violation: {0}")]
    Contract(String),
}
