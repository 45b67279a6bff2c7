//! Problem and solution types for the dense QP
//!
//! ```text
//!   minimize    0.5 x' H x + g' x
//!   subject to  A x <= b
//!               lower <= x <= upper
//! ```

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum QpError {
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Dense convex quadratic program.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    /// Symmetric positive-semidefinite cost matrix (n x n).
    pub h: DMatrix<f64>,
    /// Linear cost (n).
    pub g: DVector<f64>,
    /// Inequality matrix (m x n), rows encode a_i' x <= b_i.
    pub a_ineq: DMatrix<f64>,
    /// Inequality right-hand side (m).
    pub b_ineq: DVector<f64>,
    /// Elementwise lower bounds (n); -inf allowed.
    pub lower: DVector<f64>,
    /// Elementwise upper bounds (n); +inf allowed.
    pub upper: DVector<f64>,
}

impl QpProblem {
    /// Box-constrained problem without general inequalities.
    pub fn boxed(
        h: DMatrix<f64>,
        g: DVector<f64>,
        lower: DVector<f64>,
        upper: DVector<f64>,
    ) -> Self {
        let n = g.len();
        Self {
            h,
            g,
            a_ineq: DMatrix::zeros(0, n),
            b_ineq: DVector::zeros(0),
            lower,
            upper,
        }
    }

    /// Unconstrained problem (infinite box).
    pub fn unconstrained(h: DMatrix<f64>, g: DVector<f64>) -> Self {
        let n = g.len();
        Self::boxed(
            h,
            g,
            DVector::from_element(n, f64::NEG_INFINITY),
            DVector::from_element(n, f64::INFINITY),
        )
    }

    pub fn num_vars(&self) -> usize {
        self.g.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.b_ineq.len()
    }

    /// Checks the structural invariants: consistent dimensions, H symmetric
    /// within 1e-10, lower <= upper.
    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.num_vars();
        let m = self.num_ineq();
        if self.h.nrows() != n || self.h.ncols() != n {
            return Err(QpError::Contract(format!(
                "H is {}x{}, expected {n}x{n}",
                self.h.nrows(),
                self.h.ncols()
            )));
        }
        if self.a_ineq.nrows() != m || (m > 0 && self.a_ineq.ncols() != n) {
            return Err(QpError::Contract(format!(
                "A is {}x{}, expected {m}x{n}",
                self.a_ineq.nrows(),
                self.a_ineq.ncols()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(QpError::Contract("box bound dimensions mismatch".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if (self.h[(i, j)] - self.h[(j, i)]).abs() > 1e-10 {
                    return Err(QpError::Contract(format!(
                        "H is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        for i in 0..n {
            if !(self.lower[i] <= self.upper[i]) {
                return Err(QpError::Contract(format!(
                    "lower[{i}] = {} exceeds upper[{i}] = {}",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        Ok(())
    }

    /// Objective value 0.5 x'Hx + g'x.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.h * x)[(0, 0)] + self.g.dot(x)
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Converged,
    MaxIterations,
    Infeasible,
}

/// Solver output. `duals` covers the folded constraint set: the m inequality
/// rows first, then the n box rows (positive at the upper side, negative at
/// the lower side).
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub duals: DVector<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Solver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSettings {
    /// KKT residual threshold for `Converged`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Ridge added to H in the splitting step and the polish system.
    pub regularization: f64,
    /// ADMM penalty parameter.
    pub penalty: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 2000,
            regularization: 1e-6,
            penalty: 0.1,
        }
    }
}
