//! Weighted Lasso by cyclic coordinate descent.
//!
//! Minimises `lambda' G lambda - 2 beta_hat' lambda + 2 sum_m eta_m |lambda_m|`.
//! Its optimality conditions are exactly the Dantzig constraints plus sign
//! conditions on the support, so convergence is declared on the KKT residual.

use super::{soft, CoefficientVector, DantzigProblem, Method, SolverOptions, SolverReport, SolverStatus};
use crate::error::{Error, Result};
use crate::gram::GramMatrix;

/// Maximum violation of the optimality conditions at `lambda`, given `q = G lambda`.
fn kkt_residual(q: &[f64], lambda: &[f64], beta: &[f64], eta: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for m in 0..lambda.len() {
        let r = q[m] - beta[m];
        let v = if lambda[m] > 0.0 {
            (r + eta[m]).abs()
        } else if lambda[m] < 0.0 {
            (r - eta[m]).abs()
        } else {
            (r.abs() - eta[m]).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

pub fn lasso_objective(gram: &GramMatrix, beta: &[f64], eta: &[f64], lambda: &[f64]) -> f64 {
    let quad = gram.quad_form(lambda);
    let lin: f64 = beta.iter().zip(lambda).map(|(b, l)| b * l).sum();
    let pen: f64 = eta.iter().zip(lambda).map(|(e, l)| e * l.abs()).sum();
    quad - 2.0 * lin + 2.0 * pen
}

/// One pass over `coords`; returns the largest coordinate change.
fn sweep(g: &GramMatrix, beta: &[f64], eta: &[f64], lambda: &mut [f64], q: &mut [f64], coords: &[usize]) -> f64 {
    let mut largest = 0.0f64;
    for &m in coords {
        let gmm = g.get(m, m);
        let z = beta[m] - (q[m] - gmm * lambda[m]);
        let new = soft(z, eta[m]) / gmm;
        let delta = new - lambda[m];
        if delta != 0.0 {
            lambda[m] = new;
            for (qi, gi) in q.iter_mut().zip(g.row(m)) {
                *qi += delta * gi;
            }
            largest = largest.max(delta.abs());
        }
    }
    largest
}

pub fn lasso_solve(problem: &DantzigProblem<'_>, opts: &SolverOptions) -> Result<(CoefficientVector, SolverReport)> {
    let g = problem.gram;
    let beta = problem.beta_hat;
    let eta = problem.eta;
    let m = problem.dim();
    if let Some(bad) = (0..m).find(|&i| g.get(i, i) <= 0.0) {
        return Err(Error::InvalidParameter(format!("Gram diagonal entry {bad} is not positive")));
    }
    let all: Vec<usize> = (0..m).collect();
    let mut lambda = vec![0.0; m];
    let mut q = vec![0.0; m];
    let mut sweeps = 0usize;

    while sweeps < opts.lasso_max_sweeps {
        let change = sweep(g, beta, eta, &mut lambda, &mut q, &all);
        sweeps += 1;
        if change < opts.lasso_change_tol {
            // refresh q against accumulated round-off before testing
            q = g.mul_vec(&lambda);
            if kkt_residual(&q, &lambda, beta, eta) < opts.lasso_kkt_tol {
                break;
            }
            continue;
        }
        // iterate on the active set until it settles
        let active: Vec<usize> = (0..m).filter(|&i| lambda[i] != 0.0).collect();
        while sweeps < opts.lasso_max_sweeps {
            let c = sweep(g, beta, eta, &mut lambda, &mut q, &active);
            sweeps += 1;
            if c < opts.lasso_change_tol {
                break;
            }
        }
    }

    let coef = CoefficientVector::new(lambda, Method::Lasso);
    let q = g.mul_vec(&coef.values);
    let kkt_final = kkt_residual(&q, &coef.values, beta, eta);
    let report = SolverReport {
        iterations: sweeps,
        max_constraint_violation: problem.violation(&coef.values),
        objective: lasso_objective(g, beta, eta, &coef.values),
        status: if kkt_final < opts.lasso_kkt_tol { SolverStatus::Optimal } else { SolverStatus::MaxIter },
        duality_gap_or_kkt_residual: kkt_final,
    };
    if report.status != SolverStatus::Optimal {
        return Err(Error::Solver {
            status: SolverStatus::MaxIter,
            detail: format!("KKT residual {:.3e} after {sweeps} sweeps", kkt_final),
            report: Box::new(report),
        });
    }
    Ok((coef, report))
}
