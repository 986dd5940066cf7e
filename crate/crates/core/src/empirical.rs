//! Empirical coefficients, variance estimates and data-driven thresholds.

use serde::{Deserialize, Serialize};

use crate::dictionary::{check_domain, Dictionary};
use crate::error::{Error, Result};

/// An i.i.d. sample on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
    seed: Option<u64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::build(values, None)
    }

    pub fn with_seed(values: Vec<f64>, seed: u64) -> Result<Self> {
        Self::build(values, Some(seed))
    }

    fn build(values: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooFewObservations(values.len()));
        }
        for &x in &values {
            check_domain(x)?;
        }
        Ok(Self { values, seed })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Neumaier's compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Per-member empirical means and unbiased variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub beta_hat: Vec<f64>,
    pub sigma_hat_sq: Vec<f64>,
}

/// `beta_hat_m = (1/n) sum_i phi_m(X_i)` and the U-statistic variance
/// estimate, in a single pass over the sample.
pub fn moments(sample: &Sample, dict: &Dictionary) -> Moments {
    let m = dict.len();
    let mut s1 = vec![CompensatedSum::default(); m];
    let mut s2 = vec![CompensatedSum::default(); m];
    for &x in sample.values() {
        dict.visit_nonzero(x, |j, v| {
            s1[j].add(v);
            s2[j].add(v * v);
        });
    }
    let n = sample.n() as f64;
    let mut beta_hat = Vec::with_capacity(m);
    let mut sigma_hat_sq = Vec::with_capacity(m);
    for j in 0..m {
        let b = s1[j].value() / n;
        let m2 = s2[j].value() / n;
        beta_hat.push(b);
        sigma_hat_sq.push((n / (n - 1.0) * (m2 - b * b)).max(0.0));
    }
    Moments { n: sample.n(), beta_hat, sigma_hat_sq }
}

/// Empirical mean of member `m` over the sample.
pub fn beta_hat(sample: &Sample, dict: &Dictionary) -> Vec<f64> {
    moments(sample, dict).beta_hat
}

/// Unbiased variance estimate of `phi_m(X)`.
pub fn sigma_hat_sq(sample: &Sample, dict: &Dictionary, m: usize) -> Result<f64> {
    let member = dict.member(m)?;
    let n = sample.n() as f64;
    let (mut s1, mut s2) = (CompensatedSum::default(), CompensatedSum::default());
    for &x in sample.values() {
        let v = member.eval(x);
        s1.add(v);
        s2.add(v * v);
    }
    let b = s1.value() / n;
    Ok((n / (n - 1.0) * (s2.value() / n - b * b)).max(0.0))
}

/// `gamma * ln M / n`, the quantity shared by every threshold formula.
#[inline]
fn rate(gamma: f64, m: usize, n: usize) -> f64 {
    gamma * (m as f64).ln() / n as f64
}

/// Inflated variance `sigma_tilde^2`.
pub fn sigma_tilde_sq(sigma_hat_sq: f64, sup_norm: f64, gamma: f64, m: usize, n: usize) -> f64 {
    let r = rate(gamma, m, n);
    sigma_hat_sq + 2.0 * sup_norm * (2.0 * sigma_hat_sq * r).sqrt() + 8.0 * sup_norm * sup_norm * r
}

/// Threshold `eta = sqrt(2 sigma^2 gamma ln M / n) + 2 |phi|_inf gamma ln M / (3n)`.
pub fn eta(sigma_tilde_sq: f64, sup_norm: f64, gamma: f64, m: usize, n: usize) -> f64 {
    let r = rate(gamma, m, n);
    (2.0 * sigma_tilde_sq * r).sqrt() + 2.0 * sup_norm * r / 3.0
}

/// Threshold with the variance replaced by the sup norm of the true density.
pub fn non_adaptive_eta(f0_sup: f64, sup_norm: f64, gamma: f64, m: usize, n: usize) -> f64 {
    eta(f0_sup, sup_norm, gamma, m, n)
}

/// Deterministic envelopes `(eta_minus, eta_plus)` built from the true
/// variance `sigma0_sq`.
pub fn eta_envelopes(sigma0_sq: f64, sup_norm: f64, gamma: f64, m: usize, n: usize) -> (f64, f64) {
    let r = rate(gamma, m, n);
    let s0 = sigma0_sq.sqrt();
    let lo = s0 * (8.0 * r / 7.0).sqrt() + 2.0 * sup_norm * r / 3.0;
    let hi = s0 * (16.0 * r).sqrt() + 10.0 * sup_norm * r;
    (lo, hi)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma must be positive and finite, got {gamma}")))
    }
}

/// Everything the estimators need from a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub n: usize,
    pub gamma: f64,
    pub log_m: f64,
    pub beta_hat: Vec<f64>,
    pub sigma_hat_sq: Vec<f64>,
    pub sigma_tilde_sq: Vec<f64>,
    pub eta: Vec<f64>,
}

impl EmpiricalStats {
    pub fn compute(sample: &Sample, dict: &Dictionary, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self::from_moments(moments(sample, dict), dict.sup_norms(), gamma))
    }

    /// Thresholds for another `gamma` from already computed moments.
    pub fn from_moments(moments: Moments, sup_norms: &[f64], gamma: f64) -> Self {
        let m = sup_norms.len();
        let n = moments.n;
        let sigma_tilde_sq: Vec<f64> =
            moments.sigma_hat_sq.iter().zip(sup_norms).map(|(&s, &sup)| sigma_tilde_sq(s, sup, gamma, m, n)).collect();
        let eta = sigma_tilde_sq.iter().zip(sup_norms).map(|(&s, &sup)| eta(s, sup, gamma, m, n)).collect();
        Self {
            n,
            gamma,
            log_m: (m as f64).ln(),
            beta_hat: moments.beta_hat,
            sigma_hat_sq: moments.sigma_hat_sq,
            sigma_tilde_sq,
            eta,
        }
    }

    /// Same `beta_hat` with the non-adaptive thresholds.
    pub fn non_adaptive(&self, sup_norms: &[f64], f0_sup: f64) -> Vec<f64> {
        let m = sup_norms.len();
        sup_norms.iter().map(|&sup| non_adaptive_eta(f0_sup, sup, self.gamma, m, self.n)).collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
