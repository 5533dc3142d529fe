use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or distribution parameter is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input data violates the dataset contract (shape, sign, schema).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A prediction row does not match the model schema.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// Every response is zero so the log-mean intercept is -inf.
    #[error("unfittable data: {0}")]
    Unfittable(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("model document: {0}")]
    Document(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::InvalidData(msg.into())
    }
}
