//! Estimators of the coefficient vector: the Dantzig linear program, the
//! weighted Lasso, the least-squares refit on a selected support, and soft
//! thresholding for orthonormal dictionaries.

mod lasso;
mod refit;
mod simplex;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::GramMatrix;

pub use lasso::lasso_solve;
pub use refit::{condition_number, two_step_refit};
pub use simplex::dantzig_solve;

/// Coefficients with `|lambda_m|` below this are reported as exact zeros.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dantzig,
    Lasso,
    DantzigNonAdaptive,
    DantzigLs,
    SoftThreshold,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Dantzig, Method::Lasso, Method::DantzigNonAdaptive, Method::DantzigLs, Method::SoftThreshold];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dantzig => "dantzig",
            Method::Lasso => "lasso",
            Method::DantzigNonAdaptive => "dantzig-non-adaptive",
            Method::DantzigLs => "dantzig-ls",
            Method::SoftThreshold => "soft-threshold",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown { what: "method", name: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::MaxIter => "max-iter",
            SolverStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub max_constraint_violation: f64,
    pub objective: f64,
    pub status: SolverStatus,
    /// Duality gap for the linear program, KKT residual for the Lasso.
    pub duality_gap_or_kkt_residual: f64,
}

impl SolverReport {
    /// Closed-form estimators have nothing to iterate.
    pub(crate) fn closed_form(objective: f64, violation: f64) -> Self {
        Self {
            iterations: 0,
            max_constraint_violation: violation,
            objective,
            status: SolverStatus::Optimal,
            duality_gap_or_kkt_residual: 0.0,
        }
    }

    /// Short one-line summary used in result tables.
    pub fn digest(&self) -> String {
        format!(
            "{}:it={}:viol={:.1e}:gap={:.1e}",
            self.status, self.iterations, self.max_constraint_violation, self.duality_gap_or_kkt_residual
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Primal feasibility tolerance used inside the simplex.
    pub feasibility_tol: f64,
    /// Smallest pivot magnitude accepted by the ratio test.
    pub pivot_tol: f64,
    /// Simplex iteration cap; `None` scales with the problem size.
    pub max_iterations: Option<usize>,
    /// Iterations without dual progress before switching to Bland's rule.
    pub stall_window: usize,
    pub lasso_change_tol: f64,
    pub lasso_kkt_tol: f64,
    pub lasso_max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-11,
            pivot_tol: 1e-9,
            max_iterations: None,
            stall_window: 50,
            lasso_change_tol: 1e-10,
            lasso_kkt_tol: 1e-8,
            lasso_max_sweeps: 100_000,
        }
    }
}

/// `min |lambda|_1` subject to `|G lambda - beta_hat| <= eta` componentwise.
#[derive(Debug, Clone, Copy)]
pub struct DantzigProblem<'a> {
    pub gram: &'a GramMatrix,
    pub beta_hat: &'a [f64],
    pub eta: &'a [f64],
}

impl<'a> DantzigProblem<'a> {
    pub fn new(gram: &'a GramMatrix, beta_hat: &'a [f64], eta: &'a [f64]) -> Result<Self> {
        let m = gram.dim();
        for len in [beta_hat.len(), eta.len()] {
            if len != m {
                return Err(Error::DimensionMismatch { expected: m, got: len });
            }
        }
        if let Some(bad) = eta.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidParameter(format!("thresholds must be positive, got {bad}")));
        }
        if let Some(bad) = beta_hat.iter().find(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite coefficient estimate {bad}")));
        }
        Ok(Self { gram, beta_hat, eta })
    }

    pub fn dim(&self) -> usize {
        self.gram.dim()
    }

    /// `max_m (|(G lambda)_m - beta_hat_m| - eta_m)_+`
    pub fn violation(&self, lambda: &[f64]) -> f64 {
        let g = self.gram.mul_vec(lambda);
        g.iter().zip(self.beta_hat).zip(self.eta).map(|((gl, b), e)| ((gl - b).abs() - e).max(0.0)).fold(0.0, f64::max)
    }
}

/// A coefficient vector with its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub values: Vec<f64>,
    pub support: Vec<usize>,
    pub l1_norm: f64,
    pub method: Method,
}

impl CoefficientVector {
    /// Zeroes entries below [`SUPPORT_TOL`] and records the support.
    pub fn new(mut values: Vec<f64>, method: Method) -> Self {
        let mut support = Vec::new();
        let mut l1 = 0.0;
        for (m, v) in values.iter_mut().enumerate() {
            if v.abs() < SUPPORT_TOL {
                *v = 0.0;
            } else {
                support.push(m);
                l1 += v.abs();
            }
        }
        Self { values, support, l1_norm: l1, method }
    }

    pub fn zeros(m: usize, method: Method) -> Self {
        Self { values: vec![0.0; m], support: Vec::new(), l1_norm: 0.0, method }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `sign(b) (|b| - e)_+`
#[inline]
pub fn soft(b: f64, e: f64) -> f64 {
    if b > e {
        b - e
    } else if b < -e {
        b + e
    } else {
        0.0
    }
}

/// Closed-form estimator for orthonormal dictionaries.
pub fn soft_threshold_estimate(beta_hat: &[f64], eta: &[f64]) -> Result<CoefficientVector> {
    if beta_hat.len() != eta.len() {
        return Err(Error::DimensionMismatch { expected: beta_hat.len(), got: eta.len() });
    }
    let values = beta_hat.iter().zip(eta).map(|(&b, &e)| soft(b, e)).collect();
    Ok(CoefficientVector::new(values, Method::SoftThreshold))
}
