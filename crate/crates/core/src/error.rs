use thiserror::Error;

/// Errors produced by the balancing library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("invalid covariance model: {0}")]
    InvalidModel(String),

    #[error("scale index {index} out of range 1..={kappa}")]
    ScaleOutOfRange { index: usize, kappa: usize },

    /// An exponent left the representable range of `cosh`/`exp`; usually a
    /// sign that lambda is too large for the input scale.
    #[error("potential overflow: exponent {exponent:.3} exceeds guard {guard}")]
    Overflow { exponent: f64, guard: f64 },

    #[error("empty atom set")]
    EmptyAtoms,

    #[error("convex body rejected: {0}")]
    BodyRejected(String),

    #[error("chaining net construction failed: {0}")]
    NetConstruction(String),

    #[error("invalid color tree: {0}")]
    InvalidTree(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing configuration key `{0}`")]
    MissingKey(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for numeric overflow, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Overflow { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
