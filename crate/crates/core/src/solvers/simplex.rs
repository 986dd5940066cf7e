//! Dual simplex for the Dantzig program.
//!
//! The program is written in equality form with bounded slacks,
//!
//! ```text
//! min 1'u + 1'v   s.t.  G u - G v - w = beta_hat,  u, v >= 0,  -eta <= w <= eta,
//! ```
//!
//! and started from the all-slack basis, which is dual feasible (all reduced
//! costs equal one). A basis holds `k` structural columns `S` (each `u_j` or
//! `v_j`, never both) and the slacks of all rows except a set `R` of `k` rows.
//! Every solve with the basis reduces to the `k x k` kernel
//! `K[a][b] = sign_b G[R_a, S_b]`, which is refactored at each iteration.

use nalgebra::{DMatrix, DVector};

use super::{CoefficientVector, DantzigProblem, Method, SolverOptions, SolverReport, SolverStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slack {
    Basic,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Below,
    Above,
}

#[derive(Debug, Clone, Copy)]
enum Var {
    /// Position in the structural basis list.
    Structural(usize),
    Slack(usize),
}

#[derive(Debug, Clone, Copy)]
enum Entering {
    Structural { col: usize, sign: f64 },
    Slack(usize),
}

struct Basis {
    /// Basic structural columns with their sign (+1 for `u`, -1 for `v`).
    cols: Vec<(usize, f64)>,
    /// Rows whose slack is nonbasic.
    rows: Vec<usize>,
    slack: Vec<Slack>,
}

struct Factors {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Factors {
    fn solve(&self, rhs: DVector<f64>) -> Option<DVector<f64>> {
        self.lu.solve(&rhs)
    }

    fn solve_t(&self, rhs: DVector<f64>) -> Option<DVector<f64>> {
        self.lu_t.solve(&rhs)
    }
}

fn failure(status: SolverStatus, detail: impl Into<String>, report: SolverReport) -> Error {
    Error::Solver { status, detail: detail.into(), report: Box::new(report) }
}

/// Solves the Dantzig program and returns the coefficients with a report
/// carrying the primal violation (recomputed from `G lambda`) and the gap to
/// a dual feasible point.
pub fn dantzig_solve(problem: &DantzigProblem<'_>, opts: &SolverOptions) -> Result<(CoefficientVector, SolverReport)> {
    let g = problem.gram;
    let beta = problem.beta_hat;
    let eta = problem.eta;
    let m = problem.dim();
    let max_iter = opts.max_iterations.unwrap_or(50 * m + 1000);

    let mut basis = Basis { cols: Vec::new(), rows: Vec::new(), slack: vec![Slack::Basic; m] };
    // +1 when u_j is basic, -1 when v_j is basic
    let mut in_basis = vec![0i8; m];
    let mut bland = false;
    let mut best_dual = f64::NEG_INFINITY;
    let mut stalled = 0usize;

    let mut lambda = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut iterations = 0usize;

    loop {
        let k = basis.cols.len();
        let factors = if k > 0 {
            let kernel = DMatrix::from_fn(k, k, |a, b| {
                let (col, sign) = basis.cols[b];
                sign * g.get(basis.rows[a], col)
            });
            Some(Factors { lu_t: kernel.transpose().lu(), lu: kernel.lu() })
        } else {
            None
        };

        // primal values
        let mut x = DVector::zeros(k);
        if let Some(f) = &factors {
            let rhs = DVector::from_fn(k, |a, _| {
                let i = basis.rows[a];
                beta[i] + bound_value(basis.slack[i], eta[i])
            });
            match f.solve(rhs) {
                Some(v) => x = v,
                None => {
                    let report = provisional_report(problem, &lambda, iterations, SolverStatus::MaxIter);
                    return Err(failure(SolverStatus::MaxIter, "singular basis kernel", report));
                }
            }
        }
        lambda.iter_mut().for_each(|v| *v = 0.0);
        for (b, &(col, sign)) in basis.cols.iter().enumerate() {
            lambda[col] = sign * x[b];
        }
        // dual values
        y.iter_mut().for_each(|v| *v = 0.0);
        if let Some(f) = &factors {
            let yn = f.solve_t(DVector::from_element(k, 1.0)).unwrap_or_else(|| DVector::zeros(k));
            for (a, &i) in basis.rows.iter().enumerate() {
                y[i] = yn[a];
            }
        }
        let gy = sparse_product(g, &y, &basis.rows);
        let dual_obj: f64 = basis.rows.iter().map(|&i| beta[i] * y[i] - eta[i] * y[i].abs()).sum();
        if dual_obj > best_dual + 1e-13 * (1.0 + best_dual.abs()) {
            best_dual = dual_obj;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= opts.stall_window {
                bland = true;
            }
        }

        // leaving variable
        let cols_of_lambda: Vec<usize> = basis.cols.iter().map(|c| c.0).collect();
        let gl = sparse_product(g, &lambda, &cols_of_lambda);
        let tol = opts.feasibility_tol;
        let mut leaving: Option<(Var, Side, f64, usize)> = None;
        let mut consider = |var: Var, side: Side, infeas: f64, index: usize| {
            let better = match leaving {
                None => true,
                Some((_, _, best, best_index)) => {
                    if bland {
                        index < best_index
                    } else {
                        infeas > best
                    }
                }
            };
            if better {
                leaving = Some((var, side, infeas, index));
            }
        };
        for (b, &(col, sign)) in basis.cols.iter().enumerate() {
            if x[b] < -tol {
                let index = if sign > 0.0 { col } else { m + col };
                consider(Var::Structural(b), Side::Below, -x[b], index);
            }
        }
        for i in 0..m {
            if basis.slack[i] == Slack::Basic {
                let w = gl[i] - beta[i];
                if w < -eta[i] - tol {
                    consider(Var::Slack(i), Side::Below, -eta[i] - w, 2 * m + i);
                } else if w > eta[i] + tol {
                    consider(Var::Slack(i), Side::Above, w - eta[i], 2 * m + i);
                }
            }
        }
        let Some((leave, side, _, _)) = leaving else {
            return finish(problem, lambda, &y, iterations);
        };

        iterations += 1;
        if iterations > max_iter {
            let report = provisional_report(problem, &lambda, iterations - 1, SolverStatus::MaxIter);
            return Err(failure(
                SolverStatus::MaxIter,
                format!("no optimal basis after {max_iter} iterations"),
                report,
            ));
        }

        // row of B^{-1} A for the leaving variable: rho = B^{-T} e_r
        let mut rho = vec![0.0; m];
        let mut rho_support = basis.rows.clone();
        if let Some(f) = &factors {
            let rhs = match leave {
                Var::Structural(b) => DVector::from_fn(k, |a, _| if a == b { 1.0 } else { 0.0 }),
                Var::Slack(i0) => DVector::from_fn(k, |b, _| {
                    let (col, sign) = basis.cols[b];
                    sign * g.get(i0, col)
                }),
            };
            let rn = f.solve_t(rhs).unwrap_or_else(|| DVector::zeros(k));
            for (a, &i) in basis.rows.iter().enumerate() {
                rho[i] = rn[a];
            }
        }
        if let Var::Slack(i0) = leave {
            rho[i0] = -1.0;
            rho_support.push(i0);
        }
        let grho = sparse_product(g, &rho, &rho_support);

        // ratio test
        let piv = opts.pivot_tol;
        let mut best: Option<(Entering, f64, f64, usize)> = None;
        let mut offer = |e: Entering, alpha: f64, d: f64, at_lower: bool, index: usize| {
            let eligible = match (side, at_lower) {
                (Side::Below, true) | (Side::Above, false) => alpha < -piv,
                (Side::Below, false) | (Side::Above, true) => alpha > piv,
            };
            if !eligible {
                return;
            }
            let slack_d = if at_lower { d.max(0.0) } else { (-d).max(0.0) };
            let ratio = slack_d / alpha.abs();
            let take = match best {
                None => true,
                Some((_, r, a, idx)) => {
                    if ratio < r - 1e-12 {
                        true
                    } else if ratio <= r + 1e-12 {
                        if bland {
                            index < idx
                        } else {
                            alpha.abs() > a
                        }
                    } else {
                        false
                    }
                }
            };
            if take {
                best = Some((e, ratio, alpha.abs(), index));
            }
        };
        for j in 0..m {
            if in_basis[j] != 1 {
                offer(Entering::Structural { col: j, sign: 1.0 }, grho[j], 1.0 - gy[j], true, j);
            }
            if in_basis[j] != -1 {
                offer(Entering::Structural { col: j, sign: -1.0 }, -grho[j], 1.0 + gy[j], true, m + j);
            }
        }
        for &i in &basis.rows {
            let at_lower = basis.slack[i] == Slack::Lower;
            offer(Entering::Slack(i), -rho[i], y[i], at_lower, 2 * m + i);
        }
        let Some((enter, _, _, _)) = best else {
            let report = provisional_report(problem, &lambda, iterations, SolverStatus::Infeasible);
            return Err(failure(SolverStatus::Infeasible, "dual ray found: the constraint set is empty", report));
        };

        // basis change
        match leave {
            Var::Structural(b) => {
                let (col, _) = basis.cols.remove(b);
                in_basis[col] = 0;
            }
            Var::Slack(i0) => {
                basis.slack[i0] = if side == Side::Below { Slack::Lower } else { Slack::Upper };
                basis.rows.push(i0);
            }
        }
        match enter {
            Entering::Structural { col, sign } => {
                // a basic partner with the opposite sign can only be the leaving variable
                debug_assert_eq!(in_basis[col], 0);
                basis.cols.push((col, sign));
                in_basis[col] = if sign > 0.0 { 1 } else { -1 };
            }
            Entering::Slack(i) => {
                basis.slack[i] = Slack::Basic;
                let pos = basis.rows.iter().position(|&r| r == i).expect("nonbasic slack row");
                basis.rows.remove(pos);
            }
        }
    }
}

#[inline]
fn bound_value(s: Slack, eta: f64) -> f64 {
    match s {
        Slack::Lower => -eta,
        Slack::Upper => eta,
        Slack::Basic => 0.0,
    }
}

/// `G v` for a vector supported on `support`.
fn sparse_product(g: &crate::gram::GramMatrix, v: &[f64], support: &[usize]) -> Vec<f64> {
    let m = g.dim();
    let mut out = vec![0.0; m];
    for &j in support {
        let vj = v[j];
        if vj != 0.0 {
            for (o, gij) in out.iter_mut().zip(g.row(j)) {
                *o += gij * vj;
            }
        }
    }
    out
}

fn provisional_report(
    problem: &DantzigProblem<'_>,
    lambda: &[f64],
    iterations: usize,
    status: SolverStatus,
) -> SolverReport {
    SolverReport {
        iterations,
        max_constraint_violation: problem.violation(lambda),
        objective: lambda.iter().map(|v| v.abs()).sum(),
        status,
        duality_gap_or_kkt_residual: f64::NAN,
    }
}

fn finish(
    problem: &DantzigProblem<'_>,
    lambda: Vec<f64>,
    y: &[f64],
    iterations: usize,
) -> Result<(CoefficientVector, SolverReport)> {
    let coef = CoefficientVector::new(lambda, Method::Dantzig);
    let violation = problem.violation(&coef.values);
    // scale the dual point into {|G y| <= 1} so that its value is a valid lower bound
    let gy = problem.gram.mul_vec(y);
    let scale = gy.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let dual: f64 =
        y.iter().zip(problem.beta_hat).zip(problem.eta).map(|((yi, b), e)| b * yi - e * yi.abs()).sum::<f64>() / scale;
    let report = SolverReport {
        iterations,
        max_constraint_violation: violation,
        objective: coef.l1_norm,
        status: SolverStatus::Optimal,
        duality_gap_or_kkt_residual: coef.l1_norm - dual,
    };
    Ok((coef, report))
}
