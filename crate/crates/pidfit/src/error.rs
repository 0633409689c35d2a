//! Crate-wide error type.
//!
//! Library operations return [`Result<T>`]; the CLI maps every `Error` to
//! exit code 2 (bad input or I/O), while check *failures* (a certification
//! or ordering check that ran and did not pass) are ordinary `Ok` values
//! carrying a pass flag and map to exit code 1.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("counts carry no mass; at least one entry must be positive")]
    AllZeroCounts,

    #[error("negative count {value} at cell ({i}, {j}, {y})")]
    NegativeCount { i: usize, j: usize, y: usize, value: f64 },

    #[error("non-finite value in {context}")]
    NonFiniteState { context: &'static str },

    #[error("mass must sum to 1 within {tol:e}; found {sum}")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("distribution shapes differ: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize, usize),
        right: (usize, usize, usize),
    },

    #[error(
        "mass {mass:e} at cell ({i}, {j}, {y}) where the reference distribution is zero"
    )]
    AbsoluteContinuityViolation { i: usize, j: usize, y: usize, mass: f64 },

    #[error(
        "pair marginals are inconsistent: per-label masses differ by {deviation:e} (limit {limit:e})"
    )]
    InconsistentMarginals { deviation: f64, limit: f64 },

    #[error("every label carries mass at or below {epsilon:e}")]
    DegenerateMarginals { epsilon: f64 },

    #[error(
        "coupling was solved for different marginals (max deviation {deviation:e})"
    )]
    InconsistentInputs { deviation: f64 },

    #[error(
        "grid oracle refused: {dims} free dimensions exceeds the supported maximum of {max}"
    )]
    RefuseTooLarge { dims: usize, max: usize },

    #[error("no feasible point on the oracle grid")]
    InfeasibleGrid,

    #[error("cannot place {k} clusters with only {rows} samples")]
    TooFewSamples { k: usize, rows: usize },

    #[error("label vectors have different lengths: x1 = {x1}, x2 = {x2}, y = {y}")]
    LengthMismatch { x1: usize, x2: usize, y: usize },

    #[error("{left} has {left_rows} rows but {right} has {right_rows}")]
    RowCountMismatch {
        left: PathBuf,
        left_rows: usize,
        right: PathBuf,
        right_rows: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("covariance is singular; the two inputs are linearly dependent")]
    SingularCovariance,

    #[error("{path}:{line}: {message}")]
    FileFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("incomplete layer triple ({layer}): missing {missing}")]
    IncompleteTriple { layer: String, missing: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
