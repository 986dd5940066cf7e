//! Least-squares refit on a selected support.

use nalgebra::{DMatrix, DVector};

use super::{CoefficientVector, Method};
use crate::error::{Error, Result};
use crate::gram::GramMatrix;

/// Submatrices whose spectral condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Spectral condition number of a symmetric matrix (infinite when singular).
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let ev = a.symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `G_J x = beta_hat_J` on `support` and returns `x` padded with zeros,
/// together with the condition number of `G_J`.
pub fn two_step_refit(gram: &GramMatrix, beta_hat: &[f64], support: &[usize]) -> Result<(CoefficientVector, f64)> {
    let m = gram.dim();
    if beta_hat.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: beta_hat.len() });
    }
    if let Some(&bad) = support.iter().find(|&&j| j >= m) {
        return Err(Error::MemberOutOfRange { index: bad, size: m });
    }
    if support.is_empty() {
        return Ok((CoefficientVector::zeros(m, Method::DantzigLs), 1.0));
    }
    let sub = gram.submatrix(support);
    let cond = condition_number(&sub);
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let rhs = DVector::from_iterator(support.len(), support.iter().map(|&j| beta_hat[j]));
    let x = sub.cholesky().ok_or(Error::IllConditioned(cond))?.solve(&rhs);
    let mut values = vec![0.0; m];
    for (a, &j) in support.iter().enumerate() {
        values[j] = x[a];
    }
    Ok((CoefficientVector::new(values, Method::DantzigLs), cond))
}
