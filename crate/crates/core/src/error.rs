use thiserror::Error;

/// Failure categories for the inference toolkit.
///
/// The variants are grouped so that front ends can map them onto stable exit
/// codes: argument/domain problems, numerical breakdowns and data that
/// contradicts the measurement model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data inconsistency: {0}")]
    Inconsistent(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),

    #[error("axis mismatch: {0}")]
    AxisMismatch(String),

    #[error("optimization failure: {0}")]
    Optimization(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Config(_) | Error::AxisMismatch(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
