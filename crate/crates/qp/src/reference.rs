//! Brute-force reference solver for validation.
//!
//! Enumerates every active set of up to n constraints, solves the
//! equality-constrained QP for each, and keeps the feasible,
//! dual-feasible candidate with the lowest objective. Exponential in the
//! constraint count; intended for small test problems only.

use nalgebra::{DMatrix, DVector};

use crate::problem::QpProblem;

/// One row of the expanded constraint list a' x <= b.
struct Row {
    a: DVector<f64>,
    b: f64,
}

fn expand_rows(problem: &QpProblem) -> Vec<Row> {
    let n = problem.num_vars();
    let mut rows = Vec::new();
    for i in 0..problem.num_ineq() {
        rows.push(Row {
            a: problem.a_ineq.row(i).transpose().into_owned(),
            b: problem.b_ineq[i],
        });
    }
    for j in 0..n {
        if problem.upper[j].is_finite() {
            let mut a = DVector::zeros(n);
            a[j] = 1.0;
            rows.push(Row {
                a,
                b: problem.upper[j],
            });
        }
        if problem.lower[j].is_finite() {
            let mut a = DVector::zeros(n);
            a[j] = -1.0;
            rows.push(Row {
                a,
                b: -problem.lower[j],
            });
        }
    }
    rows
}

fn feasible(problem: &QpProblem, rows: &[Row], x: &DVector<f64>, tol: f64) -> bool {
    let _ = problem;
    rows.iter().all(|row| row.a.dot(x) <= row.b + tol)
}

/// Globally optimal solution by active-set enumeration, or `None` when the
/// problem is infeasible (no candidate passes the feasibility check).
///
/// Requires strictly convex H (the equality-constrained subproblems are
/// solved by a plain KKT factorization).
pub fn solve_by_enumeration(problem: &QpProblem, tol: f64) -> Option<(DVector<f64>, f64)> {
    let n = problem.num_vars();
    let rows = expand_rows(problem);
    let total = rows.len();
    let mut best: Option<(DVector<f64>, f64)> = None;

    let consider = |active: &[usize], best: &mut Option<(DVector<f64>, f64)>| {
        let k = active.len();
        let dim = n + k;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&problem.h);
        for (slot, &row) in active.iter().enumerate() {
            for j in 0..n {
                kkt[(n + slot, j)] = rows[row].a[j];
                kkt[(j, n + slot)] = rows[row].a[j];
            }
        }
        let mut rhs = DVector::zeros(dim);
        for j in 0..n {
            rhs[j] = -problem.g[j];
        }
        for (slot, &row) in active.iter().enumerate() {
            rhs[n + slot] = rows[row].b;
        }
        let lu = kkt.lu();
        let Some(sol) = lu.solve(&rhs) else {
            return;
        };
        if sol.iter().any(|v| !v.is_finite()) {
            return;
        }
        let x = DVector::from_fn(n, |i, _| sol[i]);
        // Dual feasibility: multipliers of active inequality rows must be
        // non-negative.
        for slot in 0..k {
            if sol[n + slot] < -tol {
                return;
            }
        }
        if !feasible(problem, &rows, &x, tol) {
            return;
        }
        let objective = problem.objective(&x);
        if best.as_ref().is_none_or(|(_, obj)| objective < *obj) {
            *best = Some((x, objective));
        }
    };

    // Enumerate subsets of size 0..=n by a simple recursive walk.
    let mut stack: Vec<usize> = Vec::new();
    fn recurse(
        start: usize,
        total: usize,
        max_size: usize,
        stack: &mut Vec<usize>,
        consider: &mut dyn FnMut(&[usize]),
    ) {
        consider(stack);
        if stack.len() == max_size {
            return;
        }
        for next in start..total {
            stack.push(next);
            recurse(next + 1, total, max_size, stack, consider);
            stack.pop();
        }
    }
    recurse(0, total, n, &mut stack, &mut |active| {
        consider(active, &mut best)
    });
    best
}
