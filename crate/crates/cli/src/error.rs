use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver error: {0}")]
    Solver(#[from] hjreg_core::Error),

    #[error("{failed} of {total} criteria failed")]
    Criteria { failed: usize, total: usize },
}

impl CliError {
    /// 2 for configuration, 3 for solver and I/O failures, 1 for failed criteria.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Criteria { .. } => 1,
        }
    }
}
