//! Independent dynamics oracles.
//!
//! The mass matrix and bias terms produced by the Jacobian assembly are
//! checked against finite differences of the Lagrangian, using body CoM
//! positions reimplemented here from scratch (positions only, no Jacobians).
//! The semi-implicit stepper is checked against an explicit fine-step
//! integrator (dt = 1e-5, 100 substeps).

use nalgebra::SVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use locodistill_sim::{RobotModel, RobotState, Simulator};

type Vec7 = SVector<f64, 7>;

/// Body description for the oracle: mass, rod inertia, CoM position, angle.
/// Positions are written out directly from the geometry, independent of the
/// simulator's Jacobian code.
fn oracle_bodies(model: &RobotModel, q: &[f64; 7]) -> Vec<(f64, f64, [f64; 2], f64)> {
    let (x, z, th) = (q[0], q[1], q[2]);
    let u = [th.cos(), th.sin()];
    let dir = |a: f64| [a.sin(), -a.cos()];
    let mut bodies = vec![(model.base_mass, model.base_inertia, [x, z], th)];
    for (sign, jh, jk) in [(1.0, 3, 4), (-1.0, 5, 6)] {
        let hip = [
            x + sign * model.base_half_length * u[0],
            z + sign * model.base_half_length * u[1],
        ];
        let a1 = th + q[jh];
        let a2 = a1 + q[jk];
        let d1 = dir(a1);
        let d2 = dir(a2);
        let t = model.thigh_length;
        let s = model.shank_length;
        bodies.push((
            model.thigh_mass,
            model.thigh_mass * t * t / 12.0,
            [hip[0] + 0.5 * t * d1[0], hip[1] + 0.5 * t * d1[1]],
            a1,
        ));
        bodies.push((
            model.shank_mass,
            model.shank_mass * s * s / 12.0,
            [
                hip[0] + t * d1[0] + 0.5 * s * d2[0],
                hip[1] + t * d1[1] + 0.5 * s * d2[1],
            ],
            a2,
        ));
    }
    bodies
}

/// Kinetic energy via centered differences of body positions along qdot.
fn oracle_kinetic(model: &RobotModel, q: &[f64; 7], qdot: &[f64; 7]) -> f64 {
    let eps = 1e-6;
    let mut qp = *q;
    let mut qm = *q;
    for i in 0..7 {
        qp[i] += eps * qdot[i];
        qm[i] -= eps * qdot[i];
    }
    let plus = oracle_bodies(model, &qp);
    let minus = oracle_bodies(model, &qm);
    let mut energy = 0.0;
    for (bp, bm) in plus.iter().zip(minus.iter()) {
        let vx = (bp.2[0] - bm.2[0]) / (2.0 * eps);
        let vz = (bp.2[1] - bm.2[1]) / (2.0 * eps);
        let w = (bp.3 - bm.3) / (2.0 * eps);
        energy += 0.5 * bp.0 * (vx * vx + vz * vz) + 0.5 * bp.1 * w * w;
    }
    energy
}

fn oracle_potential(model: &RobotModel, q: &[f64; 7]) -> f64 {
    oracle_bodies(model, q)
        .iter()
        .map(|b| b.0 * model.gravity * b.2[1])
        .sum()
}

/// dT/dqdot via finite differences. T is exactly quadratic in qdot, so a
/// large step has no truncation error and keeps rounding noise small.
fn oracle_momentum(model: &RobotModel, q: &[f64; 7], qdot: &[f64; 7]) -> Vec7 {
    let h = 1.0;
    let mut p = Vec7::zeros();
    for i in 0..7 {
        let mut vp = *qdot;
        let mut vm = *qdot;
        vp[i] += h;
        vm[i] -= h;
        p[i] = (oracle_kinetic(model, q, &vp) - oracle_kinetic(model, q, &vm)) / (2.0 * h);
    }
    p
}

fn random_state(rng: &mut ChaCha8Rng) -> RobotState {
    RobotState {
        base_x: rng.gen_range(-1.0..1.0),
        base_z: rng.gen_range(0.5..2.0),
        base_pitch: rng.gen_range(-0.6..0.6),
        base_vx: rng.gen_range(-1.0..1.0),
        base_vz: rng.gen_range(-1.0..1.0),
        base_pitch_rate: rng.gen_range(-2.0..2.0),
        joint_pos: [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.4..1.4),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.4..1.4),
        ],
        joint_vel: [
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        ],
        foot_contact: [false, false],
        time: 0.0,
    }
}

#[test]
fn mass_matrix_matches_lagrangian_hessian() {
    let model = RobotModel::default();
    let sim = Simulator::new(model.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-3;
    for _ in 0..20 {
        let state = random_state(&mut rng);
        let q = state.q();
        let mass = sim.mass_matrix(&state);
        for i in 0..7 {
            for j in 0..7 {
                // T is quadratic in qdot, so a centered second difference is
                // essentially exact.
                let mut pp = [0.0; 7];
                pp[i] += h;
                pp[j] += h;
                let mut pm = [0.0; 7];
                pm[i] += h;
                pm[j] -= h;
                let mut mp = [0.0; 7];
                mp[i] -= h;
                mp[j] += h;
                let mut mm = [0.0; 7];
                mm[i] -= h;
                mm[j] -= h;
                let fd = (oracle_kinetic(&model, &q, &pp) - oracle_kinetic(&model, &q, &pm)
                    - oracle_kinetic(&model, &q, &mp)
                    + oracle_kinetic(&model, &q, &mm))
                    / (4.0 * h * h);
                assert!(
                    (mass[(i, j)] - fd).abs() < 1e-6,
                    "M[{i},{j}] = {} vs oracle {}",
                    mass[(i, j)],
                    fd
                );
            }
        }
    }
}

#[test]
fn bias_forces_match_euler_lagrange() {
    let model = RobotModel::default();
    let sim = Simulator::new(model.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-4;
    for _ in 0..20 {
        let state = random_state(&mut rng);
        let q = state.q();
        let qdot = state.qdot();

        // d/dt (dT/dqdot) at qddot = 0: advance q along qdot.
        let mut qp = q;
        let mut qm = q;
        for i in 0..7 {
            qp[i] += h * qdot[i];
            qm[i] -= h * qdot[i];
        }
        let dp_dt = (oracle_momentum(&model, &qp, &qdot) - oracle_momentum(&model, &qm, &qdot))
            / (2.0 * h);

        // dT/dq and dV/dq.
        let mut dt_dq = Vec7::zeros();
        let mut dv_dq = Vec7::zeros();
        for i in 0..7 {
            let mut pq = q;
            let mut mq = q;
            pq[i] += h;
            mq[i] -= h;
            dt_dq[i] =
                (oracle_kinetic(&model, &pq, &qdot) - oracle_kinetic(&model, &mq, &qdot))
                    / (2.0 * h);
            dv_dq[i] =
                (oracle_potential(&model, &pq) - oracle_potential(&model, &mq)) / (2.0 * h);
        }

        // Euler-Lagrange with no applied forces: M qdd = -(dp_dt - dT/dq + dV/dq)
        // at qdd = 0, which must equal the simulator's passive forces.
        let oracle_rhs = -(dp_dt - dt_dq + dv_dq);
        let passive = sim.passive_forces(&state);
        for i in 0..7 {
            assert!(
                (passive[i] - oracle_rhs[i]).abs() < 1e-4,
                "bias[{i}] = {} vs oracle {}",
                passive[i],
                oracle_rhs[i]
            );
        }
    }
}

#[test]
fn single_step_matches_fine_step_integrator() {
    let model = RobotModel::default();
    let sim = Simulator::new(model.clone());

    // Stance reference: settle into contact equilibrium first, then nudge the
    // torques slightly. The penalty contact is stiff, so wildly off-equilibrium
    // states would measure the contact's own fast transient rather than
    // integrator agreement.
    let targets = model.nominal_joints();
    let mut stance = model.nominal_state();
    for _ in 0..2000 {
        let tau = sim.pd_torque(targets, &stance, 60.0, 0.5);
        stance = sim.step(&stance, tau, [0.0; 2]).unwrap();
    }
    let stance_torques = sim.pd_torque(targets, &stance, 60.0, 0.5);
    let stance_push = [0.3, 0.15];

    let mut flight = model.nominal_state();
    flight.base_z = 1.0;
    flight.base_vx = 0.3;
    flight.base_pitch_rate = 0.2;
    flight.joint_vel = [0.2, 0.1, -0.15, 0.1];
    flight.foot_contact = [false, false];
    let flight_torques = [0.0; 4];

    for (label, state, torques, push) in [
        ("stance", stance, stance_torques, stance_push),
        ("flight", flight, flight_torques, [0.0; 2]),
    ] {
        let coarse = sim.step(&state, torques, push).unwrap();

        // Explicit Euler at dt = 1e-5, 100 substeps.
        let fine_dt = 1e-5;
        let mut q = state.q();
        let mut v = state.qdot();
        let mut cursor = state;
        for _ in 0..100 {
            cursor.base_x = q[0];
            cursor.base_z = q[1];
            cursor.base_pitch = q[2];
            cursor.joint_pos = [q[3], q[4], q[5], q[6]];
            cursor.base_vx = v[0];
            cursor.base_vz = v[1];
            cursor.base_pitch_rate = v[2];
            cursor.joint_vel = [v[3], v[4], v[5], v[6]];
            let acc = sim.accel(&cursor, torques, push).unwrap();
            for i in 0..7 {
                q[i] += fine_dt * v[i];
                v[i] += fine_dt * acc[i];
            }
        }

        let coarse_q = coarse.q();
        let coarse_v = coarse.qdot();
        for i in 0..7 {
            assert!(
                (coarse_q[i] - q[i]).abs() < 1e-4,
                "{label} q[{i}]: {} vs {}",
                coarse_q[i],
                q[i]
            );
            assert!(
                (coarse_v[i] - v[i]).abs() < 1e-4,
                "{label} v[{i}]: {} vs {}",
                coarse_v[i],
                v[i]
            );
        }
    }
}
