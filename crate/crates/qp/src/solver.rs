//! Operator-splitting QP solver.
//!
//! The box bounds and inequality rows are folded into one constraint set
//! `l <= A x <= u`; the iteration alternates a ridge-regularized linear
//! solve with projection onto the constraint interval and a scaled dual
//! update. Once the iterates are close, an active-set polish solve tightens
//! the result to machine-precision KKT residuals. Costs are normalized
//! internally, which makes the solve exactly equivariant to positive
//! scalings of (H, g).

use nalgebra::{DMatrix, DVector};

use crate::problem::{QpError, QpProblem, QpSettings, QpSolution, QpStatus};

/// Max-norm KKT residual of a primal/dual pair.
///
/// `duals` covers the m inequality rows followed by the n box rows. The
/// residual is the max of stationarity, primal feasibility violation and
/// complementary slackness (including dual-sign violations).
pub fn kkt_residual(problem: &QpProblem, x: &DVector<f64>, duals: &DVector<f64>) -> f64 {
    let n = problem.num_vars();
    let m = problem.num_ineq();
    assert_eq!(x.len(), n, "kkt_residual: x has wrong dimension");
    assert_eq!(duals.len(), m + n, "kkt_residual: duals have wrong dimension");

    // Stationarity: H x + g + A' y_ineq + y_box.
    let mut stat = &problem.h * x + &problem.g;
    for i in 0..m {
        for j in 0..n {
            stat[j] += problem.a_ineq[(i, j)] * duals[i];
        }
    }
    for j in 0..n {
        stat[j] += duals[m + j];
    }
    let mut residual = stat.amax();

    let ax = &problem.a_ineq * x;
    for i in 0..m {
        let slack = problem.b_ineq[i] - ax[i];
        residual = residual.max(-slack.min(0.0)); // primal violation
        let y = duals[i];
        // One-sided row: a negative multiplier is a dual violation.
        residual = residual.max((-y).max(0.0));
        residual = residual.max((y.max(0.0) * slack).abs());
    }
    for j in 0..n {
        let y = duals[m + j];
        if problem.lower[j].is_finite() {
            residual = residual.max(problem.lower[j] - x[j]);
            residual = residual.max(((-y).max(0.0) * (x[j] - problem.lower[j])).abs());
        } else {
            residual = residual.max((-y).max(0.0));
        }
        if problem.upper[j].is_finite() {
            residual = residual.max(x[j] - problem.upper[j]);
            residual = residual.max((y.max(0.0) * (problem.upper[j] - x[j])).abs());
        } else {
            residual = residual.max(y.max(0.0));
        }
    }
    residual
}

struct Folded {
    rows: usize,
    a: DMatrix<f64>,
    l: DVector<f64>,
    u: DVector<f64>,
}

fn fold(problem: &QpProblem) -> Folded {
    let n = problem.num_vars();
    let m = problem.num_ineq();
    let rows = m + n;
    let mut a = DMatrix::zeros(rows, n);
    a.view_mut((0, 0), (m, n)).copy_from(&problem.a_ineq);
    for j in 0..n {
        a[(m + j, j)] = 1.0;
    }
    let mut l = DVector::from_element(rows, f64::NEG_INFINITY);
    let mut u = DVector::zeros(rows);
    for i in 0..m {
        u[i] = problem.b_ineq[i];
    }
    for j in 0..n {
        l[m + j] = problem.lower[j];
        u[m + j] = problem.upper[j];
    }
    Folded { rows, a, l, u }
}

/// Active-set polish: equality-solve on the rows the duals mark active,
/// with a couple of refinement sweeps against the unregularized system.
fn polish(
    problem: &QpProblem,
    scaled_h: &DMatrix<f64>,
    scaled_g: &DVector<f64>,
    cost_scale: f64,
    folded: &Folded,
    duals: &DVector<f64>,
    delta: f64,
) -> Option<(DVector<f64>, DVector<f64>, f64)> {
    let n = problem.num_vars();
    let y_norm = duals.amax();
    let act_eps = 1e-7 * y_norm.max(1e-30);
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for i in 0..folded.rows {
        if duals[i] > act_eps && folded.u[i].is_finite() {
            rows.push(i);
            targets.push(folded.u[i]);
        } else if duals[i] < -act_eps && folded.l[i].is_finite() {
            rows.push(i);
            targets.push(folded.l[i]);
        }
    }
    let k = rows.len();
    let dim = n + k;
    let mut kkt = DMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            kkt[(i, j)] = scaled_h[(i, j)];
        }
        kkt[(i, i)] += delta;
    }
    for (slot, &row) in rows.iter().enumerate() {
        for j in 0..n {
            kkt[(n + slot, j)] = folded.a[(row, j)];
            kkt[(j, n + slot)] = folded.a[(row, j)];
        }
        kkt[(n + slot, n + slot)] = -delta;
    }
    let lu = kkt.clone().lu();

    let mut rhs = DVector::zeros(dim);
    for j in 0..n {
        rhs[j] = -scaled_g[j];
    }
    for (slot, &target) in targets.iter().enumerate() {
        rhs[n + slot] = target;
    }
    let mut sol = lu.solve(&rhs)?;

    // Refinement against the delta-free KKT system.
    for _ in 0..2 {
        let mut residual = DVector::zeros(dim);
        for i in 0..n {
            let mut acc = scaled_g[i];
            for j in 0..n {
                acc += scaled_h[(i, j)] * sol[j];
            }
            for (slot, &row) in rows.iter().enumerate() {
                acc += folded.a[(row, i)] * sol[n + slot];
            }
            residual[i] = -acc;
        }
        for (slot, &row) in rows.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += folded.a[(row, j)] * sol[j];
            }
            residual[n + slot] = targets[slot] - acc;
        }
        let delta_sol = lu.solve(&residual)?;
        sol += delta_sol;
    }

    let x = DVector::from_fn(n, |i, _| sol[i]);
    let mut full_duals = DVector::zeros(folded.rows);
    for (slot, &row) in rows.iter().enumerate() {
        full_duals[row] = sol[n + slot] / cost_scale;
    }
    if x.iter().any(|v| !v.is_finite()) || full_duals.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let residual = kkt_residual(problem, &x, &full_duals);
    Some((x, full_duals, residual))
}

/// Primal infeasibility certificate test on a normalized dual step.
fn certifies_infeasible(folded: &Folded, dy: &DVector<f64>) -> bool {
    let norm = dy.amax();
    if norm < 1e-12 {
        return false;
    }
    let v = dy / norm;
    let at_v = folded.a.transpose() * &v;
    if at_v.amax() > 1e-8 {
        return false;
    }
    let mut support = 0.0;
    for i in 0..folded.rows {
        let plus = v[i].max(0.0);
        let minus = v[i].min(0.0);
        if plus > 1e-12 {
            if !folded.u[i].is_finite() {
                return false;
            }
            support += folded.u[i] * plus;
        }
        if minus < -1e-12 {
            if !folded.l[i].is_finite() {
                return false;
            }
            support += folded.l[i] * minus;
        }
    }
    support < -1e-8
}

/// Solves the QP starting from `x0` when provided (zero clamped into the box
/// otherwise). Deterministic: identical inputs produce identical outputs.
pub fn solve_qp_warm(
    problem: &QpProblem,
    settings: &QpSettings,
    x0: Option<&DVector<f64>>,
) -> Result<QpSolution, QpError> {
    problem.validate()?;
    let n = problem.num_vars();
    if n == 0 {
        return Ok(QpSolution {
            x: DVector::zeros(0),
            duals: DVector::zeros(problem.num_ineq()),
            objective: 0.0,
            status: QpStatus::Converged,
            iterations: 0,
            kkt_residual: 0.0,
        });
    }

    let folded = fold(problem);
    let h_max = problem.h.amax();
    let cost_scale = 1.0 / h_max.max(1e-8);
    let scaled_h = &problem.h * cost_scale;
    let scaled_g = &problem.g * cost_scale;

    let sigma = settings.regularization;
    let rho = settings.penalty;

    // K = cH + sigma I + rho A'A, factorized once.
    let mut k_mat = scaled_h.clone();
    for i in 0..n {
        k_mat[(i, i)] += sigma;
    }
    k_mat += rho * folded.a.transpose() * &folded.a;
    let chol = k_mat
        .cholesky()
        .ok_or_else(|| QpError::Contract("H + regularization is not positive definite".into()))?;

    let mut x = match x0 {
        Some(start) => {
            if start.len() != n {
                return Err(QpError::Contract(format!(
                    "warm start has dimension {}, expected {n}",
                    start.len()
                )));
            }
            start.clone()
        }
        None => DVector::from_fn(n, |i, _| 0.0f64.clamp(problem.lower[i], problem.upper[i])),
    };
    let mut z = &folded.a * &x;
    for i in 0..folded.rows {
        z[i] = z[i].clamp(folded.l[i], folded.u[i]);
    }
    let mut y = DVector::zeros(folded.rows);

    let mut best: Option<(DVector<f64>, DVector<f64>, f64)> = None;
    let mut status = QpStatus::MaxIterations;
    let mut iterations = settings.max_iterations;

    for iter in 1..=settings.max_iterations {
        let rhs = sigma * &x - &scaled_g + folded.a.transpose() * (rho * &z - &y);
        x = chol.solve(&rhs);
        let z_tilde = &folded.a * &x;
        for i in 0..folded.rows {
            let z_new = (z_tilde[i] + y[i] / rho).clamp(folded.l[i], folded.u[i]);
            y[i] += rho * (z_tilde[i] - z_new);
            z[i] = z_new;
        }

        let check = iter % 5 == 0 || iter == settings.max_iterations;
        if !check {
            continue;
        }

        let duals_orig = &y / cost_scale;
        let raw_residual = kkt_residual(problem, &x, &duals_orig);
        if best.as_ref().is_none_or(|b| raw_residual < b.2) {
            best = Some((x.clone(), duals_orig.clone(), raw_residual));
        }
        if raw_residual <= settings.tolerance {
            status = QpStatus::Converged;
            iterations = iter;
            break;
        }
        if iter % 10 == 0 {
            if let Some(polished) = polish(
                problem,
                &scaled_h,
                &scaled_g,
                cost_scale,
                &folded,
                &y,
                settings.regularization,
            ) {
                if best.as_ref().is_none_or(|b| polished.2 < b.2) {
                    best = Some(polished);
                }
                if best.as_ref().is_some_and(|b| b.2 <= settings.tolerance) {
                    status = QpStatus::Converged;
                    iterations = iter;
                    break;
                }
            }
        }
        if iter % 25 == 0 {
            // The accumulated y is itself a valid certificate direction when
            // the iteration diverges along a ray; test the recent step too.
            let dy_vec = DVector::from_fn(folded.rows, |i, _| {
                rho * (z_tilde[i] - z[i])
            });
            if certifies_infeasible(&folded, &dy_vec) || certifies_infeasible(&folded, &y) {
                status = QpStatus::Infeasible;
                iterations = iter;
                break;
            }
        }
    }

    let (x_best, duals_best, residual_best) = best.unwrap_or_else(|| {
        let duals = &y / cost_scale;
        let res = kkt_residual(problem, &x, &duals);
        (x, duals, res)
    });
    if status == QpStatus::MaxIterations && residual_best <= settings.tolerance {
        status = QpStatus::Converged;
    }
    let objective = problem.objective(&x_best);
    Ok(QpSolution {
        x: x_best,
        duals: duals_best,
        objective,
        status,
        iterations,
        kkt_residual: residual_best,
    })
}

/// Solves the QP from a neutral start.
pub fn solve_qp(problem: &QpProblem, settings: &QpSettings) -> Result<QpSolution, QpError> {
    solve_qp_warm(problem, settings, None)
}
