use thiserror::Error;

/// Errors produced by estimation, classification and imaging routines.
#[derive(Error, Debug)]
pub enum Error {
    #[error("matrix is not positive definite (dim {dim})")]
    NotPositiveDefinite { dim: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("estimation failed at iteration {iteration}: {source}")]
    IterationFailure {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("estimation under the {hypothesis} hypothesis failed: {source}")]
    Hypothesis {
        hypothesis: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("stack format error: {0}")]
    StackFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
