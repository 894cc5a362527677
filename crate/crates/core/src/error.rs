use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WcvError {
    #[error("mode mismatch: cannot combine {left} and {right} values")]
    ModeMismatch { left: &'static str, right: &'static str },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular ({0})")]
    Singular(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("invalid root ({k}, {l}) for n = {n}")]
    InvalidRoot { k: usize, l: usize, n: usize },

    #[error("direction is not singular for this irregular type")]
    NotSingular,

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid tangent: {0}")]
    InvalidTangent(String),

    #[error("centralizer condition fails: {0}")]
    Centralizer(String),

    #[error("parameter search exhausted after {trials} trials ({detail})")]
    SearchExhausted { trials: usize, detail: String },

    #[error("point is off the moment fiber: {0}")]
    OffFiber(String),

    #[error("missing unfolding parameters for marked point {0}")]
    MissingParams(usize),

    #[error("coincident poles: eps[{0}] = eps[{1}]")]
    CoincidentPoles(usize, usize),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, WcvError>;
