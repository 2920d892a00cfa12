use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precision exceeded: requested index {requested}, available {available}")]
    PrecisionExceeded { requested: usize, available: usize },
    #[error("probe primes do not split the space: {0}")]
    NeedsMorePrimes(String),
    #[error("malformed file at line {line}: {message}")]
    MalformedFile { line: usize, message: String },
    #[error("inconsistent data: {0}")]
    InconsistentData(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("estimation failure: {0}")]
    EstimationFailure(String),
    #[error("basis incomplete or dependent: {0}")]
    BasisIncompleteOrDependent(String),
    #[error("decomposition failure: {0}")]
    DecompositionFailure(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

impl Error {
    /// Stable kebab-case identifier, used in structured CLI diagnostics and scan reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::PrecisionExceeded { .. } => "precision-exceeded",
            Error::NeedsMorePrimes(_) => "needs-more-primes",
            Error::MalformedFile { .. } => "malformed-file",
            Error::InconsistentData(_) => "inconsistent-data",
            Error::Io(_) => "io-error",
            Error::QuadratureFailure(_) => "quadrature-failure",
            Error::EstimationFailure(_) => "estimation-failure",
            Error::BasisIncompleteOrDependent(_) => "basis-incomplete-or-dependent",
            Error::DecompositionFailure(_) => "decomposition-failure",
            Error::InternalInconsistency(_) => "internal-inconsistency",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
