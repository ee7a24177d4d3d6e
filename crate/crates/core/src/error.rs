use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps these onto a stable exit-code taxonomy; see the `exit_code`
/// documentation on each variant group in the binary.
#[derive(Debug, Error)]
pub enum Error {
    /// The instance contains no distributions.
    #[error("instance has no distributions")]
    EmptyInstance,

    /// A distribution failed validation (unsorted support, nonpositive mass,
    /// masses not summing to one, ...).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// An instance file (or embedded document) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A run parameter is out of its documented domain.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The dense convolution baseline would exceed its size guard.
    #[error("exact convolution needs {cells} cells, above the limit of {limit}")]
    SizeGuard { cells: u128, limit: u64 },

    /// An oracle returned answers inconsistent with a probability
    /// distribution (detected when the recursion criterion fails at the top
    /// of its search range).
    #[error("oracle violated its contract: {0}")]
    BrokenOracle(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
