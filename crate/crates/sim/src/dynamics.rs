//! Articulated rigid-body dynamics and the semi-implicit Euler stepper.
//!
//! The robot is five bodies (base + four links) with generalized coordinates
//! `q = [x, z, pitch, front_hip, front_knee, back_hip, back_knee]`. The mass
//! matrix and bias terms are assembled body by body from CoM Jacobians:
//!
//! ```text
//! M(q) = sum_b  m_b J_b^T J_b + I_b w_b w_b^T
//! M qdd = Q_applied + sum_b J_b^T m_b (g_vec - a_b)
//! ```
//!
//! where `a_b` is the velocity-product (centripetal) acceleration of body
//! `b`'s CoM and `w_b` its constant angle selector. Ground contact is a
//! penalty spring-damper in the normal direction and viscous in the
//! tangential direction, clamped to the Coulomb cone.

use nalgebra::{SMatrix, SVector};

use crate::error::SimError;
use crate::kinematics::{
    self, body_axis, com_position, com_velocity, foot_velocity, foot_world, link_dir,
    link_dir_deriv,
};
use crate::model::{Leg, RobotModel};
use crate::state::{Observation, RobotState};

type Mat7 = SMatrix<f64, 7, 7>;
type Vec7 = SVector<f64, 7>;

/// Ground reaction force at one foot, world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactForce {
    /// True iff penetration >= 0 (the contact-flag condition).
    pub active: bool,
    /// Penetration depth (m), negative when the foot is above ground.
    pub penetration: f64,
    /// World-frame force `[tangential (x), normal (z)]` applied to the foot.
    pub force: [f64; 2],
}

impl ContactForce {
    fn inactive(penetration: f64) -> Self {
        Self {
            active: false,
            penetration,
            force: [0.0, 0.0],
        }
    }
}

struct BodyKin {
    mass: f64,
    inertia: f64,
    jac: [[f64; 7]; 2],
    angle_sel: [f64; 7],
    vel_prod_acc: [f64; 2],
}

/// Deterministic planar quadruped simulator.
#[derive(Debug, Clone)]
pub struct Simulator {
    model: RobotModel,
}

impl Simulator {
    pub fn new(model: RobotModel) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &RobotModel {
        &self.model
    }

    fn bodies(&self, q: &[f64; 7], qdot: &[f64; 7]) -> [BodyKin; 5] {
        let m = &self.model;
        let base = BodyKin {
            mass: m.base_mass,
            inertia: m.base_inertia,
            jac: {
                let mut jac = [[0.0; 7]; 2];
                jac[0][0] = 1.0;
                jac[1][1] = 1.0;
                jac
            },
            angle_sel: {
                let mut w = [0.0; 7];
                w[2] = 1.0;
                w
            },
            vel_prod_acc: [0.0; 2],
        };
        [
            base,
            self.leg_thigh(q, qdot, Leg::Front),
            self.leg_shank(q, qdot, Leg::Front),
            self.leg_thigh(q, qdot, Leg::Back),
            self.leg_shank(q, qdot, Leg::Back),
        ]
    }

    fn leg_thigh(&self, q: &[f64; 7], qdot: &[f64; 7], leg: Leg) -> BodyKin {
        let m = &self.model;
        let theta = q[2];
        let jh = 3 + leg.hip_joint();
        let phi1 = theta + q[jh];
        let phi1_dot = qdot[2] + qdot[jh];
        let offset = leg.hip_sign() * m.base_half_length;
        let axis_deriv = [-theta.sin(), theta.cos()];
        let r = 0.5 * m.thigh_length;
        let d1p = link_dir_deriv(phi1);
        let mut jac = [[0.0; 7]; 2];
        for row in 0..2 {
            jac[row][row] = 1.0;
            jac[row][2] = offset * axis_deriv[row] + r * d1p[row];
            jac[row][jh] = r * d1p[row];
        }
        let u = body_axis(theta);
        let d1 = link_dir(phi1);
        let vel_prod_acc = [
            -(offset * u[0] * qdot[2] * qdot[2] + r * d1[0] * phi1_dot * phi1_dot),
            -(offset * u[1] * qdot[2] * qdot[2] + r * d1[1] * phi1_dot * phi1_dot),
        ];
        let mut angle_sel = [0.0; 7];
        angle_sel[2] = 1.0;
        angle_sel[jh] = 1.0;
        BodyKin {
            mass: m.thigh_mass,
            inertia: m.thigh_mass * m.thigh_length * m.thigh_length / 12.0,
            jac,
            angle_sel,
            vel_prod_acc,
        }
    }

    fn leg_shank(&self, q: &[f64; 7], qdot: &[f64; 7], leg: Leg) -> BodyKin {
        let m = &self.model;
        let theta = q[2];
        let jh = 3 + leg.hip_joint();
        let jk = 3 + leg.knee_joint();
        let phi1 = theta + q[jh];
        let phi2 = phi1 + q[jk];
        let phi1_dot = qdot[2] + qdot[jh];
        let phi2_dot = phi1_dot + qdot[jk];
        let offset = leg.hip_sign() * m.base_half_length;
        let axis_deriv = [-theta.sin(), theta.cos()];
        let t = m.thigh_length;
        let r = 0.5 * m.shank_length;
        let d1p = link_dir_deriv(phi1);
        let d2p = link_dir_deriv(phi2);
        let mut jac = [[0.0; 7]; 2];
        for row in 0..2 {
            jac[row][row] = 1.0;
            jac[row][2] = offset * axis_deriv[row] + t * d1p[row] + r * d2p[row];
            jac[row][jh] = t * d1p[row] + r * d2p[row];
            jac[row][jk] = r * d2p[row];
        }
        let u = body_axis(theta);
        let d1 = link_dir(phi1);
        let d2 = link_dir(phi2);
        let vel_prod_acc = [
            -(offset * u[0] * qdot[2] * qdot[2]
                + t * d1[0] * phi1_dot * phi1_dot
                + r * d2[0] * phi2_dot * phi2_dot),
            -(offset * u[1] * qdot[2] * qdot[2]
                + t * d1[1] * phi1_dot * phi1_dot
                + r * d2[1] * phi2_dot * phi2_dot),
        ];
        let mut angle_sel = [0.0; 7];
        angle_sel[2] = 1.0;
        angle_sel[jh] = 1.0;
        angle_sel[jk] = 1.0;
        BodyKin {
            mass: m.shank_mass,
            inertia: m.shank_mass * m.shank_length * m.shank_length / 12.0,
            jac,
            angle_sel,
            vel_prod_acc,
        }
    }

    /// Joint-space mass matrix M(q).
    pub fn mass_matrix(&self, state: &RobotState) -> Mat7 {
        let q = state.q();
        let qdot = state.qdot();
        let bodies = self.bodies(&q, &qdot);
        let mut mass = Mat7::zeros();
        for body in &bodies {
            for i in 0..7 {
                for j in i..7 {
                    let mut acc = body.inertia * body.angle_sel[i] * body.angle_sel[j];
                    acc += body.mass
                        * (body.jac[0][i] * body.jac[0][j] + body.jac[1][i] * body.jac[1][j]);
                    mass[(i, j)] += acc;
                }
            }
        }
        // Mirror the upper triangle.
        for i in 0..7 {
            for j in 0..i {
                mass[(i, j)] = mass[(j, i)];
            }
        }
        mass
    }

    /// Gravity plus velocity-product generalized forces (the right-hand-side
    /// additions that do not depend on applied torques or contact).
    pub fn passive_forces(&self, state: &RobotState) -> Vec7 {
        let q = state.q();
        let qdot = state.qdot();
        let bodies = self.bodies(&q, &qdot);
        let g = self.model.gravity;
        let mut rhs = Vec7::zeros();
        for body in &bodies {
            let fx = body.mass * (-body.vel_prod_acc[0]);
            let fz = body.mass * (-g - body.vel_prod_acc[1]);
            for i in 0..7 {
                rhs[i] += body.jac[0][i] * fx + body.jac[1][i] * fz;
            }
        }
        rhs
    }

    /// Full 2x7 Jacobian of a foot point with respect to q.
    pub fn foot_jacobian_full(&self, state: &RobotState, leg: Leg) -> [[f64; 7]; 2] {
        let m = &self.model;
        let theta = state.base_pitch;
        let q_hip = state.joint_pos[leg.hip_joint()];
        let q_knee = state.joint_pos[leg.knee_joint()];
        let phi1 = theta + q_hip;
        let phi2 = phi1 + q_knee;
        let offset = leg.hip_sign() * m.base_half_length;
        let axis_deriv = [-theta.sin(), theta.cos()];
        let d1p = link_dir_deriv(phi1);
        let d2p = link_dir_deriv(phi2);
        let jh = 3 + leg.hip_joint();
        let jk = 3 + leg.knee_joint();
        let t = m.thigh_length;
        let s = m.shank_length;
        let mut jac = [[0.0; 7]; 2];
        for row in 0..2 {
            jac[row][row] = 1.0;
            jac[row][2] = offset * axis_deriv[row] + t * d1p[row] + s * d2p[row];
            jac[row][jh] = t * d1p[row] + s * d2p[row];
            jac[row][jk] = s * d2p[row];
        }
        jac
    }

    /// Penalty contact force at each foot for the given state.
    pub fn contact_forces(&self, state: &RobotState) -> [ContactForce; 2] {
        let m = &self.model;
        let mut out = [ContactForce::inactive(0.0); 2];
        for leg in Leg::BOTH {
            let pos = foot_world(m, state, leg);
            let penetration = -pos[1];
            if penetration < 0.0 {
                out[leg.index()] = ContactForce::inactive(penetration);
                continue;
            }
            let vel = foot_velocity(m, state, leg);
            let normal =
                (m.contact_stiffness * penetration - m.contact_damping * vel[1]).max(0.0);
            let tangential_raw = -m.contact_damping * vel[0];
            let cap = m.friction_coeff * normal;
            let tangential = tangential_raw.clamp(-cap, cap);
            out[leg.index()] = ContactForce {
                active: true,
                penetration,
                force: [tangential, normal],
            };
        }
        out
    }

    /// Generalized forces from torques, gravity, velocity products and the
    /// external base force; contact and joint damping are handled separately.
    fn applied_forces(
        &self,
        state: &RobotState,
        joint_torques: [f64; 4],
        external_force: [f64; 2],
    ) -> Vec7 {
        let mut rhs = self.passive_forces(state);
        let limit = self.model.torque_limit;
        for j in 0..4 {
            rhs[3 + j] += joint_torques[j].clamp(-limit, limit);
        }
        rhs[0] += external_force[0];
        rhs[1] += external_force[1];
        rhs
    }

    /// Continuous-time generalized acceleration (the true ODE right-hand
    /// side) with all contact forces evaluated explicitly at this state.
    pub fn accel(
        &self,
        state: &RobotState,
        joint_torques: [f64; 4],
        external_force: [f64; 2],
    ) -> Result<Vec7, SimError> {
        let mut rhs = self.applied_forces(state, joint_torques, external_force);
        for j in 0..4 {
            rhs[3 + j] -= self.model.joint_damping * state.joint_vel[j];
        }
        let contacts = self.contact_forces(state);
        for leg in Leg::BOTH {
            let contact = contacts[leg.index()];
            if !contact.active {
                continue;
            }
            let jac = self.foot_jacobian_full(state, leg);
            for i in 0..7 {
                rhs[i] += jac[0][i] * contact.force[0] + jac[1][i] * contact.force[1];
            }
        }
        let mass = self.mass_matrix(state);
        mass.cholesky()
            .map(|chol| chol.solve(&rhs))
            .ok_or_else(|| SimError::Diverged {
                state: Box::new(*state),
            })
    }

    /// Advances the dynamics by one `sim_dt` using semi-implicit Euler.
    ///
    /// Velocity-proportional damping (joint damping, contact damping and
    /// unclamped viscous friction) is folded into the velocity solve, i.e.
    /// evaluated at the new velocity. At 1 kHz the light links make explicit
    /// damping at the configured coefficients numerically unstable; the
    /// implicit treatment is unconditionally stable and changes nothing about
    /// the continuous dynamics. `external_force` is applied at the base CoM
    /// for this step only.
    pub fn step(
        &self,
        state: &RobotState,
        joint_torques: [f64; 4],
        external_force: [f64; 2],
    ) -> Result<RobotState, SimError> {
        if joint_torques.iter().any(|t| !t.is_finite())
            || external_force.iter().any(|f| !f.is_finite())
        {
            return Err(SimError::Contract(
                "step requires finite torques and external force".into(),
            ));
        }
        let m = &self.model;
        let dt = m.sim_dt;
        let mass = self.mass_matrix(state);
        let qdot = Vec7::from_column_slice(&state.qdot());

        // rhs = M v + dt * (explicit forces); lhs = M + dt * (damping terms).
        let mut lhs = mass;
        let mut rhs = mass * qdot + dt * self.applied_forces(state, joint_torques, external_force);
        for j in 0..4 {
            lhs[(3 + j, 3 + j)] += dt * m.joint_damping;
        }
        let contacts = self.contact_forces(state);
        for leg in Leg::BOTH {
            let contact = contacts[leg.index()];
            if !contact.active || contact.force[1] <= 0.0 {
                continue;
            }
            let jac = self.foot_jacobian_full(state, leg);
            // Normal: spring part explicit, damping implicit.
            let spring = m.contact_stiffness * contact.penetration;
            for i in 0..7 {
                rhs[i] += dt * jac[1][i] * spring;
            }
            let mut damp = [0.0; 2]; // tangential, normal damping coefficients
            damp[1] = m.contact_damping;
            // Tangential: implicit viscous while inside the cone, constant
            // clamped force at the cone boundary.
            let vel = foot_velocity(m, state, leg);
            let raw_tangential = -m.contact_damping * vel[0];
            let cap = m.friction_coeff * contact.force[1];
            if raw_tangential.abs() <= cap {
                damp[0] = m.contact_damping;
            } else {
                let clamped = raw_tangential.clamp(-cap, cap);
                for i in 0..7 {
                    rhs[i] += dt * jac[0][i] * clamped;
                }
            }
            for axis in 0..2 {
                if damp[axis] == 0.0 {
                    continue;
                }
                let scale = dt * damp[axis];
                for i in 0..7 {
                    for k in i..7 {
                        lhs[(i, k)] += scale * jac[axis][i] * jac[axis][k];
                    }
                }
            }
        }
        for i in 0..7 {
            for k in 0..i {
                lhs[(i, k)] = lhs[(k, i)];
            }
        }

        let new_qdot = lhs
            .cholesky()
            .map(|chol| chol.solve(&rhs))
            .ok_or_else(|| SimError::Diverged {
                state: Box::new(*state),
            })?;

        let mut next = *state;
        next.base_vx = new_qdot[0];
        next.base_vz = new_qdot[1];
        next.base_pitch_rate = new_qdot[2];
        for j in 0..4 {
            next.joint_vel[j] = new_qdot[3 + j];
        }
        next.base_x += dt * next.base_vx;
        next.base_z += dt * next.base_vz;
        next.base_pitch += dt * next.base_pitch_rate;
        for j in 0..4 {
            next.joint_pos[j] += dt * next.joint_vel[j];
        }
        next.time += dt;
        for leg in Leg::BOTH {
            let foot = foot_world(&self.model, &next, leg);
            next.foot_contact[leg.index()] = foot[1] <= 0.0;
        }
        if !next.is_finite() {
            return Err(SimError::Diverged {
                state: Box::new(next),
            });
        }
        Ok(next)
    }

    /// PD torque toward joint targets, clamped to the actuator limit.
    pub fn pd_torque(
        &self,
        joint_targets: [f64; 4],
        state: &RobotState,
        kp: f64,
        kd: f64,
    ) -> [f64; 4] {
        let limit = self.model.torque_limit;
        let mut tau = [0.0; 4];
        for j in 0..4 {
            let raw = kp * (joint_targets[j] - state.joint_pos[j]) - kd * state.joint_vel[j];
            tau[j] = raw.clamp(-limit, limit);
        }
        tau
    }

    /// Extracts the fixed 16-entry observation vector.
    ///
    /// Foot offsets are evaluated with the base at x = 0 so translation
    /// invariance holds bit-exactly, not just up to rounding.
    pub fn observe(&self, state: &RobotState) -> Observation {
        let mut centered = *state;
        centered.base_x = 0.0;
        let com = com_position(&self.model, &centered);
        let mut obs = [0.0; 16];
        obs[0] = state.base_pitch;
        obs[1] = state.base_vx;
        obs[2] = state.base_vz;
        obs[3] = state.base_pitch_rate;
        obs[4..8].copy_from_slice(&state.joint_pos);
        obs[8..12].copy_from_slice(&state.joint_vel);
        for leg in Leg::BOTH {
            let foot = foot_world(&self.model, &centered, leg);
            obs[12 + 2 * leg.index()] = foot[0] - com[0];
            obs[13 + 2 * leg.index()] = foot[1] - com[1];
        }
        Observation(obs)
    }

    /// Kinetic energy 0.5 qd' M qd.
    pub fn kinetic_energy(&self, state: &RobotState) -> f64 {
        let qdot = Vec7::from_column_slice(&state.qdot());
        0.5 * (qdot.transpose() * self.mass_matrix(state) * qdot)[(0, 0)]
    }

    /// Gravitational potential energy relative to the ground plane.
    pub fn potential_energy(&self, state: &RobotState) -> f64 {
        let com = com_position(&self.model, state);
        self.model.total_mass() * self.model.gravity * com[1]
    }

    /// Whole-robot CoM position, re-exported for convenience.
    pub fn com_position(&self, state: &RobotState) -> [f64; 2] {
        com_position(&self.model, state)
    }

    /// Whole-robot CoM velocity.
    pub fn com_velocity(&self, state: &RobotState) -> [f64; 2] {
        com_velocity(&self.model, state)
    }

    /// World foot position, re-exported for convenience.
    pub fn foot_world(&self, state: &RobotState, leg: Leg) -> [f64; 2] {
        foot_world(&self.model, state, leg)
    }

    /// Foot position relative to the hip in the base frame.
    pub fn foot_rel_hip(&self, state: &RobotState, leg: Leg) -> [f64; 2] {
        kinematics::foot_rel_hip(&self.model, state, leg)
    }
}
