use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("active-set solver hit its iteration limit ({iterations} iterations)")]
    IterationLimit { iterations: usize, best: Vec<f64> },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("argument {t} lies outside the basis domain [{a}, {b}]")]
    Domain { t: f64, a: f64, b: f64 },

    #[error("curve `{id}`: underdetermined fit ({reason})")]
    UnderdeterminedFit { id: String, reason: String },

    #[error("degenerate pointwise variance at t = {t}")]
    DegenerateVariance { t: f64 },

    #[error("component ids do not line up: {0}")]
    Alignment(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) => 1,
            Error::Data(_)
            | Error::Domain { .. }
            | Error::UnderdeterminedFit { .. }
            | Error::DegenerateVariance { .. }
            | Error::Alignment(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::IterationLimit { .. } | Error::NotPositiveDefinite { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
