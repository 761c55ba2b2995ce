use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {path}: {err}")]
    ReadConfig { path: PathBuf, err: std::io::Error },
    #[error("cannot write {path}: {err}")]
    Write { path: PathBuf, err: std::io::Error },
    #[error(transparent)]
    Core(#[from] heatopt_core::Error),
}

impl CliError {
    /// 1 for configuration problems (including models the core rejects), 2 for
    /// numerical failures and unwritable outputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::ReadConfig { .. } => 1,
            Self::Core(e) if !e.is_numerical() => 1,
            Self::Write { .. } | Self::Core(_) => 2,
        }
    }
}
