use std::process::ExitCode;

use thiserror::Error;

/// Pipeline failures, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or inconsistent configuration, including stale stage files.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical cross-check failed; outputs were still written.
    #[error("numerical diagnostic failed: {0}")]
    Diagnostic(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: spe_core::Error,
    },

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn stage(stage: &'static str) -> impl FnOnce(spe_core::Error) -> Self {
        move |source| CliError::Stage { stage, source }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Diagnostic(_) | CliError::Stage { source: spe_core::Error::Numerical(_), .. } => ExitCode::from(3),
            CliError::Stage { .. } | CliError::Io(_) => ExitCode::FAILURE,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
