//! Dense convex QP solver for box- and inequality-constrained problems.
//!
//! Used by the centroidal force planner; small (n <= 64) and fully
//! deterministic. `reference` holds a brute-force enumeration solver for
//! cross-checking in tests.

pub mod problem;
pub mod reference;
pub mod solver;

pub use problem::{QpError, QpProblem, QpSettings, QpSolution, QpStatus};
pub use solver::{kkt_residual, solve_qp, solve_qp_warm};
