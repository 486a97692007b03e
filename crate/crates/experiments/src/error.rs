use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum ExpError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("verification failed")]
    VerifyFailed,
    #[error(transparent)]
    Core(#[from] hvn_core::Error),
}

impl ExpError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ExpError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 verification or numerical failure, 2 I/O, 3 configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExpError::Config(_) => 3,
            ExpError::Io { .. } | ExpError::Csv(_) | ExpError::MissingData(_) => 2,
            ExpError::Core(hvn_core::Error::Io(_) | hvn_core::Error::Parse { .. }) => 2,
            ExpError::VerifyFailed | ExpError::Core(_) => 1,
        }
    }
}

pub type ExpResult<T> = std::result::Result<T, ExpError>;
