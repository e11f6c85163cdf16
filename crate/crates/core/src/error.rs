use thiserror::Error;

use crate::packing::BallPacking;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters that make a formula singular (e.g. a single-phase volume fraction).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible radii: coverage {coverage:.12} exceeds 1 (balls cannot be disjoint)")]
    InfeasibleRadii { coverage: f64 },

    #[error("quadrature did not converge: refinements differ by {relative_change:.3e} (relative)")]
    QuadratureNonconvergence { relative_change: f64 },

    #[error("coverage complete: no point has clearance above {floor:e}")]
    CoverageComplete { floor: f64 },

    #[error("search budget exceeded after {} balls (coverage {:.6})", .partial.len(), .partial.coverage().fraction)]
    SearchBudgetExceeded { partial: Box<BallPacking> },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("packing invariant violated: {0}")]
    PackingInvariant(String),

    #[error("constraint violation: sum of scale sequence is {sum:.12}, expected 1")]
    Constraint { sum: f64 },

    #[error("mixed dimensions: expected {expected}, found {found}")]
    MixedDimension { expected: usize, found: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from caller-supplied input rather than an internal failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Degenerate(_)
                | Error::InvalidInput(_)
                | Error::InfeasibleRadii { .. }
                | Error::Parse { .. }
                | Error::PackingInvariant(_)
                | Error::Constraint { .. }
                | Error::MixedDimension { .. }
                | Error::Json(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
