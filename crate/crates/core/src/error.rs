use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, manifests or problem keys.
    #[error("configuration error: {0}")]
    Config(String),

    /// A decision vector could not be evaluated.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Post-hoc analysis could not be carried out on the stored data.
    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn analysis(msg: impl Into<String>) -> Self {
        Error::Analysis(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json { .. } => 2,
            Error::Evaluation(_) | Error::Analysis(_) => 3,
            Error::Io { .. } => 1,
        }
    }
}
