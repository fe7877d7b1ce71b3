use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside domain: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("envelope is not circumscribed (max violation {0:e})")]
    InvalidEnvelope(f64),
    #[error("hessian is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    /// Process exit code used by the command line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parse(_) | Error::InvalidArgument(_) => 2,
            Error::Domain(_)
            | Error::InvalidMetric(_)
            | Error::InvalidWeight(_)
            | Error::InvalidEnvelope(_)
            | Error::NotPositiveDefinite(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
