//! Reproducible experiment driver for `wzm-core`: scenario files in, CSV data
//! and a `summary.json` out.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::ScenarioConfig;
pub use experiments::{find, run, ExperimentInfo, EXPERIMENTS};
pub use output::Summary;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(wzm_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<wzm_core::Error> for CliError {
    fn from(e: wzm_core::Error) -> Self {
        match e {
            wzm_core::Error::Io(m) => CliError::Io(m),
            e => CliError::Numeric(e),
        }
    }
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

impl CliError {
    /// Configuration and file-system problems exit with 2, numerical ones with 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}
