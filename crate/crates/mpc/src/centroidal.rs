//! Centroidal force planner: the dynamic stage of the expert.
//!
//! Decision variables are the stance-foot contact forces at each horizon
//! node. The planar single-rigid-body states (CoM position/velocity, pitch,
//! pitch rate) are condensed out through the discrete dynamics
//!
//! ```text
//!   m cdd = sum f + m g,    I thdd = sum (p_i - c) x f_i
//! ```
//!
//! with moment arms frozen per node at predicted foot and reference CoM
//! positions, so the problem stays a convex QP. The cost tracks the
//! commanded forward velocity, nominal height, and zero pitch, and
//! regularizes forces toward an even share of the robot's weight; the
//! constraints are the linearized friction cone and a force box.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use locodistill_qp::{solve_qp, QpProblem, QpSettings, QpStatus};
use locodistill_sim::{Leg, RobotState, Simulator};

use crate::gait::{contact_plan, GaitSchedule};
use crate::goal::GoalCommand;

/// Planner and kinematic-stage parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcParams {
    pub horizon_nodes: usize,
    pub node_dt: f64,
    /// Sim steps between replans (20 Hz at the 1 kHz sim rate).
    pub replan_steps: usize,
    pub f_max: f64,
    /// Feedforward torque budget per joint in the force QP (N·m); keeps
    /// commanded forces realizable within the actuator limit with margin
    /// left for the PD terms.
    pub tau_ff_budget: f64,
    pub k_raibert: f64,
    pub kp: f64,
    pub kd: f64,
    pub w_vx: f64,
    pub w_vz: f64,
    pub w_height: f64,
    pub w_pitch: f64,
    pub w_pitch_rate: f64,
    pub w_force: f64,
    pub qp_tolerance: f64,
    pub qp_max_iterations: usize,
}

impl Default for MpcParams {
    fn default() -> Self {
        Self {
            horizon_nodes: 16,
            node_dt: 0.05,
            replan_steps: 50,
            f_max: 40.0,
            tau_ff_budget: 2.2,
            k_raibert: 0.03,
            kp: 3.0,
            kd: 0.1,
            w_vx: 80.0,
            w_vz: 20.0,
            w_height: 1500.0,
            w_pitch: 30.0,
            w_pitch_rate: 2.0,
            w_force: 2e-3,
            qp_tolerance: 1e-6,
            qp_max_iterations: 2000,
        }
    }
}

impl MpcParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.horizon_nodes == 0 {
            return Err("horizon_nodes must be at least 1".into());
        }
        if !(self.node_dt > 0.0) {
            return Err(format!("node_dt must be positive, got {}", self.node_dt));
        }
        if self.replan_steps == 0 {
            return Err("replan_steps must be at least 1".into());
        }
        if !(self.f_max > 0.0) {
            return Err(format!("f_max must be positive, got {}", self.f_max));
        }
        for (name, w) in [
            ("w_vx", self.w_vx),
            ("w_vz", self.w_vz),
            ("w_height", self.w_height),
            ("w_pitch", self.w_pitch),
            ("w_pitch_rate", self.w_pitch_rate),
            ("w_force", self.w_force),
        ] {
            if !(w >= 0.0) {
                return Err(format!("{name} must be non-negative, got {w}"));
            }
        }
        Ok(())
    }

    pub fn qp_settings(&self) -> QpSettings {
        QpSettings {
            tolerance: self.qp_tolerance,
            max_iterations: self.qp_max_iterations,
            ..QpSettings::default()
        }
    }
}

/// Planner status; divergence is data, never a panic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStatus {
    Ok,
    Diverged,
}

/// One horizon node of a solved plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanNode {
    pub stance: [bool; 2],
    /// Contact force per leg, world frame; zero for swing legs.
    pub force: [[f64; 2]; 2],
    pub com_pos: [f64; 2],
    pub com_vel: [f64; 2],
    pub pitch: f64,
    pub pitch_rate: f64,
}

/// Output of the dynamic stage: forces and CoM references over the horizon.
/// `nodes[0]` holds the current state and the forces applied over the first
/// interval; `nodes[k]` for k >= 1 are the planned states after k intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcSolution {
    pub status: PlanStatus,
    pub nodes: Vec<PlanNode>,
    pub node_dt: f64,
    pub qp_iterations: usize,
    pub qp_residual: f64,
}

impl MpcSolution {
    pub fn diverged(horizon: usize, node_dt: f64) -> Self {
        Self {
            status: PlanStatus::Diverged,
            nodes: vec![
                PlanNode {
                    stance: [false, false],
                    force: [[0.0; 2]; 2],
                    com_pos: [0.0; 2],
                    com_vel: [0.0; 2],
                    pitch: 0.0,
                    pitch_rate: 0.0,
                };
                horizon
            ],
            node_dt,
            qp_iterations: 0,
            qp_residual: f64::INFINITY,
        }
    }

    /// Planned state at `t` seconds after the plan instant, interpolating
    /// linearly between nodes and extrapolating with the last node beyond
    /// the horizon.
    pub fn sample_reference(&self, t: f64) -> PlanNode {
        let scaled = (t / self.node_dt).max(0.0);
        let k = scaled.floor() as usize;
        if k + 1 >= self.nodes.len() {
            return *self.nodes.last().expect("plan has at least one node");
        }
        let alpha = scaled - k as f64;
        let a = &self.nodes[k];
        let b = &self.nodes[k + 1];
        let lerp = |x: f64, y: f64| x + alpha * (y - x);
        PlanNode {
            stance: a.stance,
            force: a.force,
            com_pos: [lerp(a.com_pos[0], b.com_pos[0]), lerp(a.com_pos[1], b.com_pos[1])],
            com_vel: [lerp(a.com_vel[0], b.com_vel[0]), lerp(a.com_vel[1], b.com_vel[1])],
            pitch: lerp(a.pitch, b.pitch),
            pitch_rate: lerp(a.pitch_rate, b.pitch_rate),
        }
    }
}

/// Assembled force QP plus the metadata needed to unpack its solution.
pub struct ForceQp {
    pub problem: QpProblem,
    /// (node, leg index) per force pair, in variable order.
    pub pairs: Vec<(usize, usize)>,
    pub stance: Vec<[bool; 2]>,
    /// Frozen moment arm per (node, leg), world frame, relative to the
    /// reference CoM.
    pub arms: Vec<[[f64; 2]; 2]>,
    pub x0: [f64; 6],
    pub z_nom: f64,
}

/// Nominal whole-robot CoM height of the model's standing posture.
pub fn nominal_com_height(sim: &Simulator) -> f64 {
    sim.com_position(&sim.model().nominal_state())[1]
}

/// Single-rigid-body pitch inertia: base inertia plus the leg bodies frozen
/// in the nominal posture.
pub fn srb_pitch_inertia(sim: &Simulator) -> f64 {
    let model = sim.model();
    let state = model.nominal_state();
    let com = sim.com_position(&state);
    let mut inertia = model.base_inertia
        + model.base_mass
            * ((state.base_x - com[0]).powi(2) + (state.base_z - com[1]).powi(2));
    for leg in Leg::BOTH {
        let hip = [
            state.base_x + leg.hip_sign() * model.base_half_length,
            state.base_z,
        ];
        let a1 = state.joint_pos[leg.hip_joint()];
        let a2 = a1 + state.joint_pos[leg.knee_joint()];
        let dir = |a: f64| [a.sin(), -a.cos()];
        let d1 = dir(a1);
        let d2 = dir(a2);
        let t = model.thigh_length;
        let s = model.shank_length;
        let thigh_com = [hip[0] + 0.5 * t * d1[0], hip[1] + 0.5 * t * d1[1]];
        let shank_com = [
            hip[0] + t * d1[0] + 0.5 * s * d2[0],
            hip[1] + t * d1[1] + 0.5 * s * d2[1],
        ];
        inertia += model.thigh_mass
            * ((thigh_com[0] - com[0]).powi(2) + (thigh_com[1] - com[1]).powi(2))
            + model.thigh_mass * t * t / 12.0;
        inertia += model.shank_mass
            * ((shank_com[0] - com[0]).powi(2) + (shank_com[1] - com[1]).powi(2))
            + model.shank_mass * s * s / 12.0;
    }
    inertia
}

/// Builds the condensed force QP for the given state and goal.
pub fn build_force_qp(
    sim: &Simulator,
    state: &RobotState,
    goal: &GoalCommand,
    schedule: &GaitSchedule,
    params: &MpcParams,
) -> ForceQp {
    let model = sim.model();
    let horizon = params.horizon_nodes;
    let dt = params.node_dt;
    let mass = model.total_mass();
    let inertia = srb_pitch_inertia(sim);
    let gravity = model.gravity;
    let z_nom = nominal_com_height(sim);

    let com = sim.com_position(state);
    let com_vel = sim.com_velocity(state);
    let x0 = [
        com[0],
        com[1],
        state.base_pitch,
        com_vel[0],
        com_vel[1],
        state.base_pitch_rate,
    ];

    let stance = contact_plan(goal.phase, schedule, horizon, dt);

    // Predicted foot x positions: planted feet hold their measured position,
    // future touchdowns land at the reference hip projection plus the
    // Raibert stance offset.
    let stance_offset = goal.v_des_x * schedule.stance_duration() / 2.0;
    let mut foot_x = vec![[0.0f64; 2]; horizon];
    for leg in Leg::BOTH {
        let idx = leg.index();
        let mut carried = sim.foot_world(state, leg)[0];
        let mut was_stance = stance[0][idx];
        for k in 0..horizon {
            if stance[k][idx] {
                if k > 0 && !was_stance {
                    let t_k = k as f64 * dt;
                    let hip_ref = com[0]
                        + goal.v_des_x * t_k
                        + leg.hip_sign() * model.base_half_length;
                    carried = hip_ref + stance_offset;
                }
                foot_x[k][idx] = carried;
            }
            was_stance = stance[k][idx];
        }
    }

    let mut pairs = Vec::new();
    for (k, flags) in stance.iter().enumerate() {
        for idx in 0..2 {
            if flags[idx] {
                pairs.push((k, idx));
            }
        }
    }
    let n = 2 * pairs.len();

    // Moment arms frozen at predicted foot positions relative to the
    // reference CoM trajectory.
    let mut arms = vec![[[0.0f64; 2]; 2]; horizon];
    for (k, flags) in stance.iter().enumerate() {
        let com_ref = [com[0] + goal.v_des_x * (k as f64) * dt, z_nom];
        for idx in 0..2 {
            if flags[idx] {
                arms[k][idx] = [foot_x[k][idx] - com_ref[0], 0.0 - com_ref[1]];
            }
        }
    }

    // Condensed sensitivities: rows (cx, cz, th, vx, vz, om) of node k as an
    // affine function of the stacked forces.
    let mut g_prev = DMatrix::<f64>::zeros(6, n);
    let mut h_prev = DVector::from_column_slice(&x0);
    let mut h_qp = DMatrix::<f64>::zeros(n, n);
    let mut g_qp = DVector::<f64>::zeros(n);
    let weights = [0.0, params.w_height, params.w_pitch, params.w_vx, params.w_vz, params.w_pitch_rate];
    let x_ref = [0.0, z_nom, 0.0, goal.v_des_x, 0.0, 0.0];

    for k in 0..horizon {
        let mut g_next = g_prev.clone();
        let mut h_next = h_prev.clone();
        // Velocity rows first (semi-implicit), then positions from the new
        // velocities.
        for (slot, &(node, leg_idx)) in pairs.iter().enumerate() {
            if node != k {
                continue;
            }
            let col_fx = 2 * slot;
            let col_fz = 2 * slot + 1;
            let arm = arms[k][leg_idx];
            g_next[(3, col_fx)] += dt / mass;
            g_next[(4, col_fz)] += dt / mass;
            g_next[(5, col_fz)] += dt * arm[0] / inertia;
            g_next[(5, col_fx)] -= dt * arm[1] / inertia;
        }
        h_next[4] -= dt * gravity;
        for col in 0..n {
            g_next[(0, col)] += dt * g_next[(3, col)];
            g_next[(1, col)] += dt * g_next[(4, col)];
            g_next[(2, col)] += dt * g_next[(5, col)];
        }
        h_next[0] += dt * h_next[3];
        h_next[1] += dt * h_next[4];
        h_next[2] += dt * h_next[5];

        // Accumulate the tracking cost at node k+1.
        for row in 0..6 {
            let w = weights[row];
            if w == 0.0 {
                continue;
            }
            let jac_row = g_next.row(row);
            let offset = h_next[row] - x_ref[row];
            for i in 0..n {
                let gi = jac_row[i];
                if gi == 0.0 {
                    continue;
                }
                for j in i..n {
                    h_qp[(i, j)] += 2.0 * w * gi * jac_row[j];
                }
                g_qp[i] += 2.0 * w * gi * offset;
            }
        }
        g_prev = g_next;
        h_prev = h_next;
    }
    for i in 0..n {
        for j in 0..i {
            h_qp[(i, j)] = h_qp[(j, i)];
        }
    }

    // Force regularization toward an even share of the weight.
    let mut stance_count = vec![0usize; horizon];
    for &(k, _) in &pairs {
        stance_count[k] += 1;
    }
    for (slot, &(k, _)) in pairs.iter().enumerate() {
        let share = mass * gravity / stance_count[k] as f64;
        h_qp[(2 * slot, 2 * slot)] += 2.0 * params.w_force;
        h_qp[(2 * slot + 1, 2 * slot + 1)] += 2.0 * params.w_force;
        g_qp[2 * slot + 1] -= 2.0 * params.w_force * share;
    }

    // Friction cone rows, per-joint feedforward torque rows (|J' f| within
    // the budget, Jacobians frozen at the nominal posture), and the force box.
    let mu = model.friction_coeff;
    let nominal = model.nominal_state();
    let jac_nominal = [
        locodistill_sim::kinematics::foot_jacobian(model, &nominal, Leg::Front),
        locodistill_sim::kinematics::foot_jacobian(model, &nominal, Leg::Back),
    ];
    let m_rows = 6 * pairs.len();
    let mut a_ineq = DMatrix::<f64>::zeros(m_rows, n);
    let mut b_ineq = DVector::<f64>::zeros(m_rows);
    let mut lower = DVector::<f64>::zeros(n);
    let mut upper = DVector::<f64>::zeros(n);
    for (slot, &(_, leg_idx)) in pairs.iter().enumerate() {
        let col_fx = 2 * slot;
        let col_fz = 2 * slot + 1;
        let row0 = 6 * slot;
        a_ineq[(row0, col_fx)] = 1.0;
        a_ineq[(row0, col_fz)] = -mu;
        a_ineq[(row0 + 1, col_fx)] = -1.0;
        a_ineq[(row0 + 1, col_fz)] = -mu;
        let jac = jac_nominal[leg_idx];
        for joint in 0..2 {
            // tau_joint = -(J[:,joint] . f); bound both signs.
            let jx = jac[0][joint];
            let jz = jac[1][joint];
            a_ineq[(row0 + 2 + 2 * joint, col_fx)] = jx;
            a_ineq[(row0 + 2 + 2 * joint, col_fz)] = jz;
            b_ineq[row0 + 2 + 2 * joint] = params.tau_ff_budget;
            a_ineq[(row0 + 3 + 2 * joint, col_fx)] = -jx;
            a_ineq[(row0 + 3 + 2 * joint, col_fz)] = -jz;
            b_ineq[row0 + 3 + 2 * joint] = params.tau_ff_budget;
        }
        lower[col_fx] = -mu * params.f_max;
        upper[col_fx] = mu * params.f_max;
        lower[col_fz] = 0.0;
        upper[col_fz] = params.f_max;
    }

    ForceQp {
        problem: QpProblem {
            h: h_qp,
            g: g_qp,
            a_ineq,
            b_ineq,
            lower,
            upper,
        },
        pairs,
        stance,
        arms,
        x0,
        z_nom,
    }
}

/// Runs the dynamic stage: builds and solves the force QP.
///
/// Divergence (invalid state or a failed QP) is reported in the status, not
/// as an error.
pub fn plan(
    sim: &Simulator,
    state: &RobotState,
    goal: &GoalCommand,
    schedule: &GaitSchedule,
    params: &MpcParams,
) -> MpcSolution {
    if !state.is_finite() || state.base_z <= 0.0 {
        return MpcSolution::diverged(params.horizon_nodes, params.node_dt);
    }
    let qp = build_force_qp(sim, state, goal, schedule, params);
    let n = qp.problem.num_vars();
    let model = sim.model();
    let mass = model.total_mass();
    let inertia = srb_pitch_inertia(sim);
    let mu = model.friction_coeff;

    let (forces, qp_iterations, qp_residual) = if n == 0 {
        (DVector::zeros(0), 0, 0.0)
    } else {
        match solve_qp(&qp.problem, &params.qp_settings()) {
            Ok(sol) if sol.status == QpStatus::Converged => {
                (sol.x, sol.iterations, sol.kkt_residual)
            }
            _ => return MpcSolution::diverged(params.horizon_nodes, params.node_dt),
        }
    };

    // Unpack forces per node, clamping residual tolerance-level violations
    // so the cone invariant holds exactly.
    let horizon = params.horizon_nodes;
    let mut node_forces = vec![[[0.0f64; 2]; 2]; horizon];
    for (slot, &(k, leg_idx)) in qp.pairs.iter().enumerate() {
        let fz = forces[2 * slot + 1].clamp(0.0, params.f_max);
        let fx = forces[2 * slot].clamp(-mu * fz, mu * fz);
        node_forces[k][leg_idx] = [fx, fz];
    }

    // Roll the SRB dynamics forward to recover the planned reference states.
    let dt = params.node_dt;
    let mut nodes = Vec::with_capacity(horizon);
    let mut x = qp.x0;
    for k in 0..horizon {
        nodes.push(PlanNode {
            stance: qp.stance[k],
            force: node_forces[k],
            com_pos: [x[0], x[1]],
            com_vel: [x[3], x[4]],
            pitch: x[2],
            pitch_rate: x[5],
        });
        let mut fx_sum = 0.0;
        let mut fz_sum = 0.0;
        let mut torque = 0.0;
        for idx in 0..2 {
            if qp.stance[k][idx] {
                let f = node_forces[k][idx];
                let arm = qp.arms[k][idx];
                fx_sum += f[0];
                fz_sum += f[1];
                torque += arm[0] * f[1] - arm[1] * f[0];
            }
        }
        x[3] += dt * fx_sum / mass;
        x[4] += dt * (fz_sum / mass - model.gravity);
        x[5] += dt * torque / inertia;
        x[0] += dt * x[3];
        x[1] += dt * x[4];
        x[2] += dt * x[5];
    }

    MpcSolution {
        status: PlanStatus::Ok,
        nodes,
        node_dt: dt,
        qp_iterations,
        qp_residual,
    }
}
