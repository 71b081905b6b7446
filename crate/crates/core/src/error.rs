use std::path::PathBuf;

use thiserror::Error;

use crate::linalg::SolverReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not positive definite: pivot {index} has value {value:e}")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("matrix is singular at pivot {0}")]
    Singular(usize),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error("{block} block solve did not converge ({iterations} iterations, residual {residual:e})")]
    InnerSolve {
        block: String,
        iterations: usize,
        residual: f64,
    },

    #[error("linear solve did not converge after {} iterations (residual {:e})", .0.iterations, .0.final_residual_norm)]
    NotConverged(Box<SolverReport>),

    #[error("eigenvalue iteration did not converge; best estimates |lambda|min = {min:e}, |lambda|max = {max:e}")]
    EigenNotConverged { min: f64, max: f64 },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("degenerate cell {0}")]
    DegenerateCell(usize),

    #[error("point {0:?} lies outside the domain")]
    PointOutside([f64; 3]),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
