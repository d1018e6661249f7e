//! Scenario runner for the formal KMS workbench.

use thiserror::Error;

pub mod report;
pub mod runner;
pub mod scenario;

pub use report::{emit, Format, Report};
pub use runner::{run_scenario, Overrides};
pub use scenario::{resolve, Scenario, BUNDLED};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "FKMS_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Config { origin: String, message: String },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("report: {0}")]
    Report(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;
