use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension n={n} exceeds the dense limit of {limit}")]
    Capacity { n: u32, limit: u32 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("no bound applicable: {0}")]
    NoBoundApplicable(String),

    #[error("cannot parse vertex {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
