use thiserror::Error;

use crate::solvers::{SolverReport, SolverStatus};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample size n = {0} is too small to size a dictionary (need n >= 16)")]
    SampleTooSmall(usize),

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },

    #[error("point {0} lies outside [0, 1]")]
    OutOfDomain(f64),

    #[error("member index {index} out of range for a dictionary of {size} members")]
    MemberOutOfRange { index: usize, size: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("need at least two observations, got {0}")]
    TooFewObservations(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge for members ({0}, {1}): error estimate {2:e}")]
    QuadraturePair(usize, usize, f64),

    #[error("quadrature did not converge: error estimate {0:e}")]
    Quadrature(f64),

    #[error("solver stopped with status {status:?}: {detail}")]
    Solver { status: SolverStatus, detail: String, report: Box<SolverReport> },

    #[error("refit submatrix is singular or ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("combinatorial budget exceeded: {needed} subsets requested, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("gram cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
