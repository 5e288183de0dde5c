use std::path::PathBuf;

/// Failures surfaced by the experiment harness and the command line.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error in '{key}': {message}")]
    Config { key: String, message: String },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("initialization error: {0}")]
    Initialization(String),
    /// A replica failed after initialisation.
    #[error("run error: {0}")]
    Run(String),
    #[error("comparison error: {0}")]
    Comparison(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(ctxocc_core::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad configuration or input files,
    /// 3 when a framework cannot be initialised, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. }
            | HarnessError::Parse { .. }
            | HarnessError::Schema { .. } => 2,
            HarnessError::Core(ctxocc_core::Error::Config(_)) => 2,
            HarnessError::Initialization(_)
            | HarnessError::Core(ctxocc_core::Error::Initialization(_)) => 3,
            _ => 1,
        }
    }
}

impl From<ctxocc_core::Error> for HarnessError {
    fn from(e: ctxocc_core::Error) -> Self {
        match e {
            ctxocc_core::Error::Initialization(m) => HarnessError::Initialization(m),
            other => HarnessError::Core(other),
        }
    }
}
