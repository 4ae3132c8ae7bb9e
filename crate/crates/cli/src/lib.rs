//! Command-line front end: configuration, scenario orchestration and CSV
//! export for the hybrid surface/volume/wire forward solver.

pub mod commands;
pub mod config;
mod output;

use hybem::formulation::FormulationError;
use thiserror::Error;

pub use commands::{cmd_info, cmd_leadfield, cmd_solve, cmd_validate_sphere};
pub use config::{Method, Overrides, RunConfig};

/// Artifact version stamped into every CSV.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure during {stage}: {source}")]
    Solver {
        stage: &'static str,
        source: FormulationError,
    },
    #[error("validation bound violated: {0}")]
    Validation(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { .. } => 3,
            CliError::Validation(_) => 4,
            CliError::Output(_) => 1,
        }
    }
}
