use std::path::PathBuf;

/// Errors surfaced by the runner, each mapped to a stable exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Config or input file rejected before any computation.
    #[error("{0}")]
    Config(String),

    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },

    /// A computation failed partway through a pipeline stage.
    #[error("{stage} failed: {source}")]
    Numerical {
        stage: &'static str,
        source: ratelab_core::Error,
    },

    /// Every requested check ran, and these did not pass.
    #[error("checks failed: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Schema { .. } => 2,
            LabError::Numerical { .. } | LabError::ChecksFailed(_) => 3,
            LabError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
        let path = path.into();
        move |source| LabError::Io { path, source }
    }

    pub(crate) fn numerical(stage: &'static str) -> impl FnOnce(ratelab_core::Error) -> LabError {
        move |source| LabError::Numerical { stage, source }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
