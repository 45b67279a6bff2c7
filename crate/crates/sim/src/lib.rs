//! Deterministic planar (sagittal-plane) quadruped simulator.
//!
//! A 7-DoF floating-base articulated model (base + two 2-link legs) with
//! compliant penalty ground contact, stepped by semi-implicit Euler at a
//! fixed 1 kHz. Everything is a pure function of its inputs; randomness is
//! confined to explicitly passed RNGs, so simulations are reproducible and
//! embarrassingly parallel.

pub mod dynamics;
pub mod error;
pub mod kinematics;
pub mod model;
pub mod perturb;
pub mod rng;
pub mod state;

pub use dynamics::{ContactForce, Simulator};
pub use error::SimError;
pub use kinematics::{clamp_to_annulus, com_position, com_velocity, inverse_kinematics};
pub use model::{JointLimits, Leg, RobotModel};
pub use perturb::{sample_perturbed_init, PerturbationBounds};
pub use rng::derive_rng;
pub use state::{Observation, RobotState, OBSERVATION_DIM};
