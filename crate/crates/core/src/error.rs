use thiserror::Error;

use crate::krylov::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot coarsen {nx}x{ny} mesh: {reason}")]
    CannotCoarsen { nx: usize, ny: usize, reason: String },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("element block {element} is not positive definite (penalty below the coercivity bound?)")]
    SingularBlock { element: usize },

    #[error("singular pivot at row {row} while factorising {level}")]
    SingularPivot { level: String, row: usize },

    #[error("indefinite operator: p^T A p = {curvature:e} at iteration {iteration}")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("GCR stagnated at iteration {iteration}: search direction norm {norm:e}")]
    Stagnation { iteration: usize, norm: f64 },

    #[error("solver did not converge after {} iterations (relative residual {:e})", .0.iterations, .0.final_relative_residual)]
    NotConverged(Box<SolveReport>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
