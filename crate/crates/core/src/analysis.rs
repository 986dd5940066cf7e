//! Restricted eigenvalues and correlations of a Gram matrix by exhaustive
//! enumeration, the two structural assumptions built on them, and the
//! constants of the local assumption and oracle bound.

use itertools::Itertools;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::GramMatrix;

/// Default cap on the number of subsets (or subset pairs) visited.
pub const SUBSET_BUDGET: u128 = 1_000_000;

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn check_budget(needed: u128, budget: u128) -> Result<()> {
    if needed > budget {
        Err(Error::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

fn eig_range(sub: &DMatrix<f64>) -> (f64, f64) {
    if sub.nrows() == 1 {
        let v = sub[(0, 0)];
        return (v, v);
    }
    let ev = sub.symmetric_eigenvalues();
    (ev.min(), ev.max())
}

/// `phi_min(l)` and `phi_max(l)`: extreme eigenvalues of `G_J` over all
/// `J` with `1 <= |J| <= l`.
pub fn restricted_eigenvalues(gram: &GramMatrix, l: usize, budget: u128) -> Result<(f64, f64)> {
    let profile = eigen_profile(gram, l, budget)?;
    Ok((profile.0[l - 1], profile.1[l - 1]))
}

/// Running extremes for every size `1..=l`: entry `s - 1` holds
/// `(phi_min(s), phi_max(s))`.
fn eigen_profile(gram: &GramMatrix, l: usize, budget: u128) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = gram.dim();
    if l == 0 || l > m {
        return Err(Error::InvalidParameter(format!("subset size {l} must lie in 1..={m}")));
    }
    let needed = (1..=l).map(|s| binomial(m, s)).fold(0u128, u128::saturating_add);
    check_budget(needed, budget)?;
    let mut mins = Vec::with_capacity(l);
    let mut maxs = Vec::with_capacity(l);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for size in 1..=l {
        for set in (0..m).combinations(size) {
            let (a, b) = eig_range(&gram.submatrix(&set));
            lo = lo.min(a);
            hi = hi.max(b);
        }
        mins.push(lo);
        maxs.push(hi);
    }
    Ok((mins, maxs))
}

/// `theta_{l,l'}`: the largest spectral norm of `G_{J,J'}` over disjoint
/// `J`, `J'` with `|J| <= l` and `|J'| <= l'`.
///
/// Submatrix norms grow with the index sets, so only the full sizes need to
/// be visited.
pub fn restricted_correlation(gram: &GramMatrix, l: usize, l_prime: usize, budget: u128) -> Result<f64> {
    let m = gram.dim();
    if l == 0 || l_prime == 0 || l + l_prime > m {
        return Err(Error::InvalidParameter(format!("sizes ({l}, {l_prime}) need 1 <= l, l' and l + l' <= {m}")));
    }
    check_budget(binomial(m, l).saturating_mul(binomial(m - l, l_prime)), budget)?;
    let mut best = 0.0f64;
    for set in (0..m).combinations(l) {
        let rest: Vec<usize> = (0..m).filter(|i| !set.contains(i)).collect();
        for other in rest.iter().copied().combinations(l_prime) {
            let block = gram.block(&set, &other);
            let norm = if block.len() == 1 { block[(0, 0)].abs() } else { block.singular_values().max() };
            best = best.max(norm);
        }
    }
    Ok(best)
}

/// Flags and constants for one `(s, l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub s: usize,
    pub l: usize,
    pub phi_min_2s: f64,
    pub theta_s_2s: f64,
    pub phi_min_s_plus_l: f64,
    pub phi_max_l: f64,
    /// `phi_min(2s) > theta_{s,2s}`
    pub assumption1: bool,
    pub kappa1: f64,
    pub mu1: f64,
    /// `l phi_min(s + l) > s phi_max(l)`
    pub assumption2: bool,
    pub kappa2: f64,
    pub mu2: f64,
}

/// Evaluates both assumptions at `(s, l)` with their `(kappa, mu)` pairs.
///
/// `theta_{s,2s}` ranges over `|J'| <= 2s`; when `3s > M` the complement of
/// `J` has fewer than `2s` elements, so the largest admissible `|J'|` is
/// `M - s`.
pub fn check_assumptions(gram: &GramMatrix, s: usize, l: usize, budget: u128) -> Result<AssumptionCheck> {
    let m = gram.dim();
    if s == 0 || 2 * s > m || l < s || s + l > m {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= s <= M/2, l >= s and s + l <= M (s = {s}, l = {l}, M = {m})"
        )));
    }
    let top = (2 * s).max(s + l);
    let (mins, maxs) = eigen_profile(gram, top, budget)?;
    let phi_min_2s = mins[2 * s - 1];
    let phi_min_sl = mins[s + l - 1];
    let phi_max_l = maxs[l - 1];
    let theta = restricted_correlation(gram, s, (2 * s).min(m - s), budget)?;
    let sf = s as f64;
    let lf = l as f64;

    let assumption1 = phi_min_2s > theta;
    let (kappa1, mu1) = if phi_min_2s > 0.0 {
        (phi_min_2s.sqrt() * (1.0 - theta / phi_min_2s), theta / (sf * phi_min_2s).sqrt())
    } else {
        (0.0, f64::INFINITY)
    };

    let assumption2 = lf * phi_min_sl > sf * phi_max_l;
    let kappa2 =
        if phi_min_sl > 0.0 { phi_min_sl.sqrt() * (1.0 - (sf * phi_max_l / (lf * phi_min_sl)).sqrt()) } else { 0.0 };
    let mu2 = (phi_max_l / lf).sqrt();

    Ok(AssumptionCheck {
        s,
        l,
        phi_min_2s,
        theta_s_2s: theta,
        phi_min_s_plus_l: phi_min_sl,
        phi_max_l,
        assumption1,
        kappa1,
        mu1,
        assumption2,
        kappa2,
        mu2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEntry {
    pub l: usize,
    pub l_prime: usize,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub dim: usize,
    pub l_max: usize,
    /// `phi_min[l - 1] = phi_min(l)`
    pub phi_min: Vec<f64>,
    pub phi_max: Vec<f64>,
    pub theta: Vec<ThetaEntry>,
    pub checks: Vec<AssumptionCheck>,
}

/// Profiles up to `l_max` and assumption checks for every admissible
/// `s <= s_max`, `s <= l <= l_max`.
pub fn structural_report(gram: &GramMatrix, s_max: usize, l_max: usize, budget: u128) -> Result<StructuralReport> {
    let m = gram.dim();
    let l_max = l_max.min(m);
    let (phi_min, phi_max) = eigen_profile(gram, l_max, budget)?;
    let mut theta = Vec::new();
    for l in 1..=l_max {
        for l_prime in 1..=l_max {
            if l + l_prime <= m {
                theta.push(ThetaEntry { l, l_prime, theta: restricted_correlation(gram, l, l_prime, budget)? });
            }
        }
    }
    let mut checks = Vec::new();
    for s in 1..=s_max.min(m / 2) {
        for l in s..=l_max {
            if s + l <= m {
                checks.push(check_assumptions(gram, s, l, budget)?);
            }
        }
    }
    Ok(StructuralReport { dim: m, l_max, phi_min, phi_max, theta, checks })
}

fn split_norms(lambda: &[f64], j0: &[usize]) -> (f64, f64, f64) {
    let mut in_l2 = 0.0;
    let mut in_l1 = 0.0;
    let mut out_l1 = 0.0;
    for (m, v) in lambda.iter().enumerate() {
        if j0.contains(&m) {
            in_l2 += v * v;
            in_l1 += v.abs();
        } else {
            out_l1 += v.abs();
        }
    }
    (in_l2.sqrt(), in_l1, out_l1)
}

fn check_indices(m: usize, j0: &[usize]) -> Result<()> {
    match j0.iter().find(|&&j| j >= m) {
        Some(&bad) => Err(Error::MemberOutOfRange { index: bad, size: m }),
        None => Ok(()),
    }
}

/// `|f_lambda|_2 - kappa |lambda_J0|_2 + mu (|lambda_J0^c|_1 - |lambda_J0|_1)_+`,
/// nonnegative exactly when the local assumption holds at `lambda`.
pub fn local_assumption_margin(gram: &GramMatrix, j0: &[usize], lambda: &[f64], kappa: f64, mu: f64) -> Result<f64> {
    let m = gram.dim();
    if lambda.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: lambda.len() });
    }
    check_indices(m, j0)?;
    let norm = gram.quad_form(lambda).max(0.0).sqrt();
    let (in_l2, in_l1, out_l1) = split_norms(lambda, j0);
    Ok(norm - kappa * in_l2 + mu * (out_l1 - in_l1).max(0.0))
}

/// Right-hand side of the oracle inequality for one candidate `lambda`:
///
/// `bias_sq + beta Lambda^2 / |J0| (1 + 2 mu sqrt|J0| / kappa)^2
///  + 16 |J0| (1/beta + 1/kappa^2) eta_inf^2`
///
/// with `Lambda = |lambda_J0^c|_1 + (|lambda_hat|_1 - |lambda|_1)_+ / 2`.
#[allow(clippy::too_many_arguments)]
pub fn oracle_bound_rhs(
    lambda: &[f64],
    j0: &[usize],
    lambda_hat: &[f64],
    eta_inf: f64,
    kappa: f64,
    mu: f64,
    beta: f64,
    bias_sq: f64,
) -> Result<f64> {
    if !(beta > 0.0 && kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("need beta > 0 and kappa > 0 (beta = {beta}, kappa = {kappa})")));
    }
    if j0.is_empty() {
        return Err(Error::InvalidParameter("J0 must be nonempty".into()));
    }
    if lambda_hat.len() != lambda.len() {
        return Err(Error::DimensionMismatch { expected: lambda.len(), got: lambda_hat.len() });
    }
    check_indices(lambda.len(), j0)?;
    let (_, in_l1, out_l1) = split_norms(lambda, j0);
    let hat_l1: f64 = lambda_hat.iter().map(|v| v.abs()).sum();
    let big_lambda = out_l1 + (hat_l1 - (in_l1 + out_l1)).max(0.0) / 2.0;
    let s = j0.len() as f64;
    let spread = 1.0 + 2.0 * mu * s.sqrt() / kappa;
    Ok(bias_sq
        + beta * big_lambda * big_lambda / s * spread * spread
        + 16.0 * s * (1.0 / beta + 1.0 / (kappa * kappa)) * eta_inf * eta_inf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(rho: f64) -> GramMatrix {
        GramMatrix::new(2, vec![1.0, rho, rho, 1.0]).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(40, 20), 137_846_528_820);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn identity_profile() {
        let g = GramMatrix::identity(6);
        for l in 1..=6 {
            assert_eq!(restricted_eigenvalues(&g, l, SUBSET_BUDGET).unwrap(), (1.0, 1.0));
        }
        assert_eq!(restricted_correlation(&g, 2, 3, SUBSET_BUDGET).unwrap(), 0.0);
    }

    #[test]
    fn two_by_two() {
        let (lo, hi) = restricted_eigenvalues(&pair(0.5), 2, SUBSET_BUDGET).unwrap();
        assert_abs_diff_eq!(lo, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(restricted_correlation(&pair(-0.3), 1, 1, SUBSET_BUDGET).unwrap(), 0.3);
        assert_eq!(restricted_eigenvalues(&pair(0.9), 1, SUBSET_BUDGET).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn identity_assumptions() {
        let c = check_assumptions(&GramMatrix::identity(4), 1, 1, SUBSET_BUDGET).unwrap();
        assert!(c.assumption1);
        assert_eq!((c.kappa1, c.mu1), (1.0, 0.0));
        assert!(!c.assumption2);
        assert_eq!(c.kappa2, 0.0);
    }

    #[test]
    fn strongly_correlated_pair_fails_first_assumption() {
        let c = check_assumptions(&pair(0.9), 1, 1, SUBSET_BUDGET).unwrap();
        assert_abs_diff_eq!(c.phi_min_2s, 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(c.theta_s_2s, 0.9, epsilon = 1e-14);
        assert!(!c.assumption1);
        assert!(c.kappa1 < 0.0);
    }

    #[test]
    fn budget_is_enforced() {
        let g = GramMatrix::identity(60);
        match restricted_eigenvalues(&g, 5, SUBSET_BUDGET) {
            Err(Error::BudgetExceeded { needed, budget }) => {
                assert!(needed > budget);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        assert!(restricted_correlation(&g, 3, 3, SUBSET_BUDGET).is_err());
    }

    #[test]
    fn argument_ranges() {
        let g = GramMatrix::identity(4);
        assert!(check_assumptions(&g, 0, 1, SUBSET_BUDGET).is_err());
        assert!(check_assumptions(&g, 3, 3, SUBSET_BUDGET).is_err());
        assert!(check_assumptions(&g, 2, 1, SUBSET_BUDGET).is_err());
        assert!(restricted_correlation(&g, 3, 2, SUBSET_BUDGET).is_err());
    }

    #[test]
    fn margin_cases() {
        let g = GramMatrix::identity(3);
        let lambda = [0.3, -0.4, 0.0];
        assert_abs_diff_eq!(local_assumption_margin(&g, &[0, 1], &lambda, 1.0, 5.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_eq!(local_assumption_margin(&g, &[0], &[0.0; 3], 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn oracle_rhs_without_lambda_terms() {
        let lambda = [1.0, 0.0, 0.0];
        let hat = [0.9, 0.0, 0.0];
        let rhs = oracle_bound_rhs(&lambda, &[0], &hat, 0.1, 1.0, 0.0, 1.0, 0.05).unwrap();
        assert_abs_diff_eq!(rhs, 0.05 + 16.0 * 2.0 * 0.01, epsilon = 1e-15);
        let bigger = oracle_bound_rhs(&lambda, &[0], &[2.0, 0.0, 0.0], 0.1, 1.0, 0.0, 1.0, 0.05).unwrap();
        assert!(bigger > rhs);
        assert!(oracle_bound_rhs(&lambda, &[0], &hat, 0.1, 0.0, 0.0, 1.0, 0.0).is_err());
    }
}
