use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, channel counts or parameters that do not fit together.
    #[error("configuration error: {0}")]
    Config(String),
    /// Non-finite or out-of-range values.
    #[error("data error: {0}")]
    Data(String),
    /// A documented precondition (divisibility, padding, hidden-state presence) was not met.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Malformed weight archive or config document.
    #[error("format error: {0}")]
    Format(String),
    /// Weight archive does not provide what the pipeline requires.
    #[error("validation error: offending tensors: {}", .0.join(", "))]
    Validation(Vec<String>),
    /// An adjoint produced a non-finite gradient or failed a tolerance.
    #[error("verification failure: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

macro_rules! config_err {
    ($($arg:tt)*) => { $crate::error::Error::Config(format!($($arg)*)) };
}
macro_rules! contract_err {
    ($($arg:tt)*) => { $crate::error::Error::Contract(format!($($arg)*)) };
}
pub(crate) use config_err;
pub(crate) use contract_err;
