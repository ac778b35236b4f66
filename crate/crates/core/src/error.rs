use thiserror::Error;

use crate::sdp::IterateRecord;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entries in {0}")]
    NonFinite(String),

    #[error("matrix exponential overflow (scaled 1-norm {norm:e})")]
    ExpmOverflow { norm: f64 },

    #[error("eigensolver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("matrix is not symmetric: deviation {deviation:e} exceeds {tolerance:e}")]
    Asymmetric { deviation: f64, tolerance: f64 },

    #[error("invalid system: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSystem(Vec<crate::model::Issue>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ill-posed program: {0}")]
    IllPosed(String),

    #[error("solver failure: {message} (after {} iterates)", trace.len())]
    Solver {
        message: String,
        trace: Vec<IterateRecord>,
    },

    #[error("{what} is infeasible (margin {margin:e})")]
    Infeasible { what: String, margin: f64 },

    #[error("near-singular S~({tau}) when recovering gains (condition {condition:e})")]
    SingularGain { tau: f64, condition: f64 },

    #[error("system is not mean-square stable: {0}")]
    Unstable(String),

    #[error("no threshold in range [{lo}, {hi}]: {reason}")]
    NoThreshold {
        lo: f64,
        hi: f64,
        reason: String,
        scan: Vec<(f64, f64)>,
    },

    #[error("simulation failed: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
