use thiserror::Error;

/// Errors raised by model construction and the numerical pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("model error: {0}")]
    Model(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("hopping at offset {offset:?} has no Hermitian partner")]
    MissingPartner { offset: Vec<i32> },

    #[error("Hermiticity violated at offset {offset:?} (max deviation {deviation:.3e})")]
    NotHermitian { offset: Vec<i32>, deviation: f64 },

    #[error("chiral symmetry violated: {0}")]
    ChiralViolation(String),

    #[error("invalid grading: {0}")]
    InvalidGrading(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("spectral gap closes: min |eigenvalue| = {min_gap:.3e} ({context})")]
    GapClosed { context: String, min_gap: f64 },

    #[error("invariant is not integral: raw value {raw}, residual {residual:.3e} ({context})")]
    NonInteger {
        context: String,
        raw: f64,
        residual: f64,
    },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("branch tracking failed: {0}")]
    Tracking(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Coarse classification used by front ends to pick exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Model(_)
            | Error::Dimension { .. }
            | Error::MissingPartner { .. }
            | Error::NotHermitian { .. }
            | Error::ChiralViolation(_)
            | Error::InvalidGrading(_)
            | Error::Geometry(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorCategory::Input,
            Error::GapClosed { .. } | Error::Precondition(_) => ErrorCategory::Assumption,
            Error::NonInteger { .. } | Error::Eigensolver(_) | Error::Tracking(_) => {
                ErrorCategory::Numerical
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Input,
    Numerical,
    Assumption,
}

pub type Result<T> = std::result::Result<T, Error>;
