use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input data (empty batch, out-of-range p-value, length mismatch).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Statistically degenerate input, e.g. no p-value at or above q for the δ rule.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("ground-truth null labels are required")]
    MissingLabels,

    #[error("numeric failure: {0}")]
    Numeric(String),
}
