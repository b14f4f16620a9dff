use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("unsupported field: {0}")]
    UnsupportedField(String),
    #[error("elements live in incompatible fields")]
    IncompatibleFields,
    #[error("zero is not allowed as an exponential base")]
    ZeroBase,
    #[error("division by zero")]
    DivisionByZero,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{what} exceeds cap ({requested} > {limit})")]
    Cap {
        what: &'static str,
        limit: u64,
        requested: u64,
    },
    #[error("cannot factor {0}: cofactor too large for the built-in factorizer")]
    Factorization(String),
    #[error("could not certify multiplicative relations among units")]
    UnitRelations,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("matrix is not invertible")]
    Singular,
    #[error("invalid semisimplicity certificate: {0}")]
    Certificate(String),
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),
}

pub type Result<T> = core::result::Result<T, Error>;
