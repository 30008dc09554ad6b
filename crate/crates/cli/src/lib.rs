//! Scenario-driven front end for the checker, the random scheduler and the
//! runtime lock benchmarks.

pub mod compare;
pub mod report;
pub mod run;
pub mod scenario;

use semrw_core::runtime::RuntimeError;
use semrw_core::ConfigError;
use thiserror::Error;

pub use compare::{compare, CompareTable};
pub use report::{ReportDocument, RunResult};
pub use run::{run_scenario, RunOutput};
pub use scenario::{Mode, ScenarioFile};

/// Process exit status of a completed run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// Properties held or the measurement completed.
    Ok,
    /// A safety violation or deadlock was found.
    Violation,
    BudgetExceeded,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violation => 2,
            Status::BudgetExceeded => 3,
        }
    }
}

/// Exit status for usage and configuration errors.
pub const USAGE_ERROR: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("invalid field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("cannot compare: {0}")]
    Mismatch(String),
    #[error("internal model error: {0}")]
    Model(String),
}

impl CliError {
    pub fn field(field: &'static str, reason: impl Into<String>) -> Self {
        CliError::Field { field, reason: reason.into() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Field { field: e.field, reason: e.reason }
    }
}
