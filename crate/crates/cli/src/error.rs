use std::path::Path;

use mfg_prox::MfgError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] MfgError),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("models differ: {0}")]
    ModelMismatch(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
