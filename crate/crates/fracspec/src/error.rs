use thiserror::Error;

/// Library-wide error type.
///
/// Errors are split into two broad categories that the CLI maps onto exit
/// codes: input/validation problems (exit 2) and computational failures
/// (exit 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("matrix is not expansive: eigenvalue {0} has |lambda| <= 1 + 1e-9")]
    NotExpansive(f64),

    #[error("enumeration cap exceeded: {needed} items, cap {cap} (set FS_ENUM_CAP to raise)")]
    EnumerationCap { needed: u128, cap: u64 },

    #[error("requested error {target} unattainable within {max_depth} product factors (reached {reached})")]
    ErrorUnattainable {
        target: f64,
        max_depth: usize,
        reached: f64,
    },

    #[error("computation failed: {0}")]
    Computation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_)
            | Error::NotExpansive(_)
            | Error::EnumerationCap { .. }
            | Error::Parse(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
