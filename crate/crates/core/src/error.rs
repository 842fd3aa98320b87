use thiserror::Error;

/// Failure modes across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid metric at ({x}, {y}): {detail}")]
    InvalidMetric { x: f64, y: f64, detail: String },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{name}` takes {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("matrix is not positive definite (pivot {pivot} at elimination step {step})")]
    NotPositiveDefinite { pivot: f64, step: usize },

    #[error("matrix is not symmetrizable: {0}")]
    NotSymmetrizable(String),

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("dimension mismatch: S+ has {plus}, S- has {minus}")]
    DimensionMismatch { plus: usize, minus: usize },

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("Kasteleyn face rule violated on face {face}: sign product {product}")]
    FaceRule { face: usize, product: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("level {level}: {source}")]
    AtLevel { level: u32, source: Box<Error> },
}

impl Error {
    /// True for errors caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidDomain(_)
            | Error::InvalidMetric { .. }
            | Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::Arity { .. }
            | Error::Config(_) => true,
            Error::AtLevel { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
