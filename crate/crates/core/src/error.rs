use thiserror::Error;

/// Errors raised by the numerical kernel and the studies built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds threshold {threshold:.3e}")]
    NotHermitian { asymmetry: f64, threshold: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("at g/g_c = {ratio}: {source}")]
    AtGridPoint {
        ratio: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tags the error with the coupling ratio it came from.
    pub fn at_ratio(self, ratio: f64) -> Self {
        Error::AtGridPoint {
            ratio,
            source: Box::new(self),
        }
    }

    /// The innermost error, with grid-point annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtGridPoint { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
