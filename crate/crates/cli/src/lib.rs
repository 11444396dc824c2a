pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

pub use commands::{execute, Command, Report};
pub use config::{parse_config, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{0}")]
    Setup(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Setup(_) => 2,
            CliError::Io(_) | CliError::Run(_) => 1,
        }
    }
}
