use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are grouped so that front ends can map them onto distinct exit
/// codes: malformed input documents, invalid models, exceeded size guards, and
/// precondition violations on operation arguments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("schema violation in `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("guard exceeded: {what} is {actual}, limit {limit}")]
    Guard {
        what: &'static str,
        actual: f64,
        limit: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error(
        "infeasible power tolerance at level {level}: target {target}, nearest achievable {achievable}"
    )]
    InfeasibleTolerance {
        level: usize,
        target: f64,
        achievable: f64,
    },

    #[error("invalid argument `{name}`: {message}")]
    InvalidArgument { name: &'static str, message: String },

    #[error("channel is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
}

impl Error {
    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn arg(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            message: message.into(),
        }
    }

    pub(crate) fn guard(what: &'static str, actual: f64, limit: f64) -> Self {
        Error::Guard {
            what,
            actual,
            limit,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
