use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is out of range or inconsistent with another.
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    /// An operation argument violates its precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The projected filter energy `g` vanished, so the error probability is undefined.
    #[error("degenerate subspace: projected filter energy g = {0:e}")]
    DegenerateSubspace(f64),

    #[error("unknown {kind} `{name}` (known: {known})")]
    Unknown {
        kind: &'static str,
        name: String,
        known: String,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
