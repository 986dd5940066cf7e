//! Sparse density estimation on [0, 1] over dictionaries of unit-norm
//! functions.
//!
//! The estimators work from the empirical coefficients
//! `beta_hat_m = (1/n) sum_i phi_m(X_i)` and per-coefficient thresholds
//! `eta_m` built from the sample variance of `phi_m(X)`:
//!
//! * the Dantzig estimate minimises `|lambda|_1` subject to
//!   `|(G lambda)_m - beta_hat_m| <= eta_m` for all `m` ([`solvers::dantzig_solve`]);
//! * the weighted Lasso penalises `|lambda_m|` by `eta_m` ([`solvers::lasso_solve`]);
//! * the two-step estimate refits by least squares on the Dantzig support
//!   ([`solvers::two_step_refit`]).

pub mod analysis;
pub mod density;
pub mod dictionary;
pub mod empirical;
pub mod error;
pub mod experiments;
pub mod gram;
pub mod quad;
pub mod solvers;
pub mod wavelet;

pub use density::{DensityId, TrueDensity};
pub use dictionary::{Dictionary, DictionaryKind, Member};
pub use empirical::{EmpiricalStats, Sample};
pub use error::{Error, Result};
pub use experiments::{BenchmarkConfig, ExperimentConfig, RunResult, Setup};
pub use gram::{GramCache, GramMatrix};
pub use solvers::{CoefficientVector, DantzigProblem, Method, SolverOptions, SolverReport, SolverStatus};
