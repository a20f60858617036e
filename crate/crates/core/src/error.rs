use thiserror::Error;

/// Errors raised by the toolkit. Solver outcomes such as `max_iter` or
/// detected infeasibility are reported through `SolveStatus`, not here.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} variables, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degree error: {0}")]
    Degree(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("zero polynomial has no weighted norm")]
    ZeroPolynomial,

    #[error("polynomial is not homogeneous")]
    NotHomogeneous,

    #[error("evaluation budget exceeded: {count} evaluations requested, limit is {limit}")]
    BudgetExceeded { count: u128, limit: u128 },

    #[error("matrix is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e} below {threshold:e}")]
    NotPsd { min_eigenvalue: f64, threshold: f64 },

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("no feasible sample: {0}")]
    NoFeasibleSample(String),

    #[error("positivity check failed at {point:?}: value {value:e} below {threshold:e}")]
    PositivityViolation {
        point: Vec<f64>,
        value: f64,
        threshold: f64,
    },

    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
