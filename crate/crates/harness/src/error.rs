use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] pregeomzol_core::Error),

    #[error("internal invariant failed: {0}")]
    Invariant(String),
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// Process exit status: 1 usage or configuration, 2 resource cap,
    /// 3 internal invariant failure.
    pub fn exit_code(&self) -> i32 {
        use pregeomzol_core::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::Io { .. } => 1,
            HarnessError::Core(E::ResourceCap { .. } | E::BudgetExceeded { .. }) => 2,
            HarnessError::Core(_) => 1,
            HarnessError::Invariant(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
