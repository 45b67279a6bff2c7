//! The expert controller: replans the force QP at 20 Hz and turns plans into
//! joint position targets plus feedforward torques at 1 kHz.

use locodistill_sim::{
    clamp_to_annulus, inverse_kinematics, JointLimits, Leg, RobotState, Simulator,
};

use crate::centroidal::{nominal_com_height, plan, MpcParams, MpcSolution, PlanStatus};
use crate::gait::GaitSchedule;
use crate::goal::GoalCommand;
use crate::footstep::{foot_placement, swing_trajectory};

/// Joint position targets plus feedforward torques for one sim step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertAction {
    pub joint_targets: [f64; 4],
    pub feedforward_torque: [f64; 4],
}

/// Hard fall conditions shared by the expert-divergence and policy-failure
/// predicates: the base at ground level, extreme pitch, or a non-finite
/// state.
pub fn hard_fall(state: &RobotState) -> bool {
    !state.is_finite()
        || state.base_z < 0.08
        || state.base_pitch.abs() > 60.0 * std::f64::consts::PI / 180.0
}

/// Expert configuration: gait schedule plus planner parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcExpert {
    pub schedule: GaitSchedule,
    pub params: MpcParams,
}

impl Default for MpcExpert {
    fn default() -> Self {
        Self {
            schedule: GaitSchedule::default(),
            params: MpcParams::default(),
        }
    }
}

impl MpcExpert {
    /// Number of consecutive failed replans that count as divergence.
    pub const QP_FAIL_LIMIT: usize = 5;

    pub fn session<'a>(
        &'a self,
        sim: &Simulator,
        state: &RobotState,
        goal: &GoalCommand,
    ) -> ExpertSession<'a> {
        let mut swing_start = [[0.0; 2]; 2];
        let mut sched_stance = [false; 2];
        for leg in Leg::BOTH {
            swing_start[leg.index()] = sim.foot_world(state, leg);
            sched_stance[leg.index()] = self.schedule.in_stance(goal.phase, leg);
        }
        ExpertSession {
            expert: self,
            plan: None,
            plan_age_steps: 0,
            needs_replan: true,
            swing_start,
            sched_stance,
            qp_fail_streak: 0,
            ik_fallbacks: 0,
        }
    }
}

/// Rollout-scoped expert state: the current plan, swing liftoff anchors and
/// the consecutive-replan-failure counter.
pub struct ExpertSession<'a> {
    expert: &'a MpcExpert,
    plan: Option<MpcSolution>,
    plan_age_steps: usize,
    needs_replan: bool,
    swing_start: [[f64; 2]; 2],
    sched_stance: [bool; 2],
    qp_fail_streak: usize,
    ik_fallbacks: u64,
}

impl<'a> ExpertSession<'a> {
    /// Forces a replan at the next control step (used when the expert takes
    /// over mid-rollout).
    pub fn force_replan(&mut self) {
        self.needs_replan = true;
    }

    /// True once the expert has diverged: repeated QP failures or a hard
    /// fall while in control.
    pub fn diverged(&self, state: &RobotState) -> bool {
        self.qp_fail_streak >= MpcExpert::QP_FAIL_LIMIT || hard_fall(state)
    }

    /// Count of swing targets that had to be clamped back into reach.
    pub fn ik_fallbacks(&self) -> u64 {
        self.ik_fallbacks
    }

    pub fn current_plan(&self) -> Option<&MpcSolution> {
        self.plan.as_ref()
    }

    /// One 1 kHz control step: replan at the 20 Hz cadence, then evaluate the
    /// kinematic stage against the active plan.
    pub fn control(&mut self, sim: &Simulator, state: &RobotState, goal: &GoalCommand) -> ExpertAction {
        // Track schedule stance -> swing transitions to anchor swing splines.
        for leg in Leg::BOTH {
            let now = self.expert.schedule.in_stance(goal.phase, leg);
            let idx = leg.index();
            if self.sched_stance[idx] && !now {
                self.swing_start[idx] = sim.foot_world(state, leg);
            }
            self.sched_stance[idx] = now;
        }

        if self.needs_replan || self.plan_age_steps >= self.expert.params.replan_steps {
            let solution = plan(sim, state, goal, &self.expert.schedule, &self.expert.params);
            if solution.status == PlanStatus::Ok {
                self.plan = Some(solution);
                self.qp_fail_streak = 0;
            } else {
                self.qp_fail_streak += 1;
            }
            self.plan_age_steps = 0;
            self.needs_replan = false;
        }

        let action = match &self.plan {
            Some(solution) => {
                let plan_time = self.plan_age_steps as f64 * sim.model().sim_dt;
                expert_action_inner(
                    sim,
                    state,
                    goal,
                    solution,
                    &self.expert.schedule,
                    &self.expert.params,
                    plan_time,
                    &self.swing_start,
                    &mut self.ik_fallbacks,
                )
            }
            // No plan has ever succeeded: hold the current posture.
            None => ExpertAction {
                joint_targets: JointLimits::default().clamp(state.joint_pos),
                feedforward_torque: [0.0; 4],
            },
        };
        self.plan_age_steps += 1;
        action
    }
}

/// Kinematic stage for a given plan. Stance legs hold their measured foot
/// position relative to the plan's desired base pose; swing legs track the
/// swing spline toward the current Raibert target. Stance legs also receive
/// a Jacobian-transpose feedforward of the planned contact force.
pub fn expert_action(
    sim: &Simulator,
    state: &RobotState,
    goal: &GoalCommand,
    solution: &MpcSolution,
    schedule: &GaitSchedule,
    params: &MpcParams,
    plan_time: f64,
    swing_start: &[[f64; 2]; 2],
) -> ExpertAction {
    let mut scratch = 0;
    expert_action_inner(
        sim,
        state,
        goal,
        solution,
        schedule,
        params,
        plan_time,
        swing_start,
        &mut scratch,
    )
}

#[allow(clippy::too_many_arguments)]
fn expert_action_inner(
    sim: &Simulator,
    state: &RobotState,
    goal: &GoalCommand,
    solution: &MpcSolution,
    schedule: &GaitSchedule,
    params: &MpcParams,
    plan_time: f64,
    swing_start: &[[f64; 2]; 2],
    ik_fallbacks: &mut u64,
) -> ExpertAction {
    let model = sim.model();
    let limits = JointLimits::default();
    let reference = solution.sample_reference(plan_time);

    // Desired base pose from the planned CoM, using the nominal base-to-CoM
    // offset expressed in the body frame.
    let base_minus_com = model.nominal_state().base_z - nominal_com_height(sim);
    let pitch_des = reference.pitch;
    let (sin_p, cos_p) = pitch_des.sin_cos();
    let base_des = [
        reference.com_pos[0] - base_minus_com * sin_p,
        reference.com_pos[1] + base_minus_com * cos_p,
    ];

    let force_node = ((plan_time / solution.node_dt).floor() as usize)
        .min(solution.nodes.len().saturating_sub(1));

    let mut targets = state.joint_pos;
    let mut feedforward = [0.0; 4];
    for leg in Leg::BOTH {
        let idx = leg.index();
        let hip_des = [
            base_des[0] + leg.hip_sign() * model.base_half_length * cos_p,
            base_des[1] + leg.hip_sign() * model.base_half_length * sin_p,
        ];
        let foot_des = if schedule.in_stance(goal.phase, leg) {
            sim.foot_world(state, leg)
        } else {
            let swing_ph = schedule.swing_phase(goal.phase, leg);
            let target_x = foot_placement(sim, state, goal, schedule, params, leg);
            swing_trajectory(
                swing_ph,
                swing_start[idx],
                [target_x, 0.0],
                schedule.swing_height,
            )
        };
        let world_rel = [foot_des[0] - hip_des[0], foot_des[1] - hip_des[1]];
        let rel = [
            cos_p * world_rel[0] + sin_p * world_rel[1],
            -sin_p * world_rel[0] + cos_p * world_rel[1],
        ];
        let clamped = clamp_to_annulus(model, rel, 1e-3);
        if (clamped[0] - rel[0]).abs() > 1e-9 || (clamped[1] - rel[1]).abs() > 1e-9 {
            *ik_fallbacks += 1;
        }
        match inverse_kinematics(model, clamped, leg) {
            Ok((hip, knee)) => {
                targets[leg.hip_joint()] = hip;
                targets[leg.knee_joint()] = knee;
            }
            Err(_) => {
                *ik_fallbacks += 1;
            }
        }

        if schedule.in_stance(goal.phase, leg) && reference.stance[idx] {
            let force = solution.nodes[force_node].force[idx];
            let jac = locodistill_sim::kinematics::foot_jacobian(model, state, leg);
            feedforward[leg.hip_joint()] =
                -(jac[0][0] * force[0] + jac[1][0] * force[1]);
            feedforward[leg.knee_joint()] =
                -(jac[0][1] * force[0] + jac[1][1] * force[1]);
        }
    }
    targets = limits.clamp(targets);
    let limit = model.torque_limit;
    for tau in feedforward.iter_mut() {
        *tau = tau.clamp(-limit, limit);
    }
    ExpertAction {
        joint_targets: targets,
        feedforward_torque: feedforward,
    }
}

/// One recorded training sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutSample {
    pub observation: [f64; 16],
    pub goal: [f64; 3],
    pub action: [f64; 4],
}

/// Expert-only rollout result.
#[derive(Debug, Clone)]
pub struct ExpertRollout {
    /// States visited, starting with the initial state (length steps + 1 when
    /// no divergence).
    pub states: Vec<RobotState>,
    pub goals: Vec<GoalCommand>,
    pub samples: Vec<RolloutSample>,
    pub diverged: bool,
}

/// Runs the expert closed-loop for `duration` seconds: replans at the 20 Hz
/// cadence, applies PD torque on the joint targets plus the stance
/// feedforward at 1 kHz, and records one sample every `sample_stride` steps.
/// Divergence (per the expert predicate) stops the rollout and is returned
/// as data, not an error.
pub fn expert_rollout(
    sim: &Simulator,
    expert: &MpcExpert,
    start: &RobotState,
    phase0: f64,
    v_des_x: f64,
    duration: f64,
    sample_stride: Option<usize>,
) -> ExpertRollout {
    let dt = sim.model().sim_dt;
    let n_steps = (duration / dt).round() as usize;
    let mut state = *start;
    let mut goal = GoalCommand::at_time(0.0, phase0, expert.schedule.gait_period, v_des_x);
    let mut session = expert.session(sim, &state, &goal);
    let mut result = ExpertRollout {
        states: Vec::with_capacity(n_steps + 1),
        goals: Vec::with_capacity(n_steps),
        samples: Vec::new(),
        diverged: false,
    };
    result.states.push(state);
    for step in 0..n_steps {
        goal = GoalCommand::at_time(step as f64 * dt, phase0, expert.schedule.gait_period, v_des_x);
        if session.diverged(&state) {
            result.diverged = true;
            break;
        }
        let action = session.control(sim, &state, &goal);
        if let Some(stride) = sample_stride {
            if stride > 0 && step % stride == 0 {
                result.samples.push(RolloutSample {
                    observation: sim.observe(&state).0,
                    goal: goal.encode(),
                    action: action.joint_targets,
                });
            }
        }
        let mut torques = sim.pd_torque(action.joint_targets, &state, expert.params.kp, expert.params.kd);
        for j in 0..4 {
            torques[j] += action.feedforward_torque[j];
        }
        match sim.step(&state, torques, [0.0; 2]) {
            Ok(next) => {
                state = next;
                result.states.push(state);
                result.goals.push(goal);
            }
            Err(_) => {
                result.diverged = true;
                break;
            }
        }
    }
    if session.diverged(&state) {
        result.diverged = true;
    }
    result
}
