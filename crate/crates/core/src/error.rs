use thiserror::Error;

/// Errors produced by grid construction, transforms, solvers and probes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid mismatch")]
    GridMismatch,

    #[error("disk out of bounds: center ({re}, {im}), radius {radius}")]
    DiskOutOfBounds { re: f64, im: f64, radius: f64 },

    #[error("not elliptic: {0}")]
    NotElliptic(String),

    #[error("degenerate linear map: |b| = {b_abs} >= |a| = {a_abs}")]
    DegenerateLinearMap { a_abs: f64, b_abs: f64 },

    #[error("dependent generators: wronskian vanishes within threshold on the whole interior")]
    DependentGenerators,

    #[error("mismatched coefficients between solve results")]
    MismatchedCoefficients,

    #[error("test function is not compactly supported in the support box")]
    NonCompactTestFunction,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
