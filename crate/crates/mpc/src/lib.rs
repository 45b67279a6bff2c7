//! Two-stage planar MPC expert.
//!
//! The dynamic stage solves a centroidal force QP over a receding horizon at
//! 20 Hz; the kinematic stage (Raibert foot placement, swing splines, IK
//! against the planned base pose) turns the active plan into joint position
//! targets and stance feedforward torques at 1 kHz.

pub mod centroidal;
pub mod expert;
pub mod footstep;
pub mod gait;
pub mod goal;

pub use centroidal::{
    build_force_qp, nominal_com_height, plan, srb_pitch_inertia, MpcParams, MpcSolution,
    PlanNode, PlanStatus,
};
pub use expert::{
    expert_action, expert_rollout, hard_fall, ExpertAction, ExpertRollout, ExpertSession,
    MpcExpert, RolloutSample,
};
pub use footstep::{foot_placement, swing_trajectory};
pub use gait::{contact_plan, frac, GaitSchedule};
pub use goal::GoalCommand;
