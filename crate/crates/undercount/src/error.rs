use thiserror::Error;

/// Errors raised by the fitting and inference routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("design matrix is rank deficient (column {0})")]
    SingularDesign(usize),

    #[error("iteration limit reached after {iterations} iterations (last loglik {loglik})")]
    IterationLimit { iterations: usize, loglik: f64 },

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("degrees of freedom exhausted: n = {n}, p = {p}")]
    DegreesOfFreedom { n: usize, p: usize },

    #[error("negated Hessian is not positive definite")]
    Curvature,

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("unknown parameter name: {0}")]
    UnknownParameter(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Error {
        Error::Domain(msg.into())
    }
}
