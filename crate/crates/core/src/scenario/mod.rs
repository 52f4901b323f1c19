//! Scenario documents, their validation, and batch runs that write
//! plot-ready tables.

mod config;
mod output;
mod run;

use serde::Serialize;

use crate::error::Error;

pub use config::{
    parse_config, ChainConfig, DesignConfig, DeviceConfig, DisorderConfig, IoConfig, Issue,
    IssueKind, PumpConfig, ScenarioConfig, SweepConfig, SweepKind, Swept,
};
pub use output::{OutputTable, Provenance, RunOutput};
pub use run::{run_scenario, RunContext};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// A failed run, mapped onto the stable exit codes.
#[derive(Debug)]
pub enum ScenarioError {
    Validation(Vec<Issue>),
    Computation(Error),
    Io(Error),
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    status: &'static str,
    exit_code: i32,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    issues: Option<&'a [Issue]>,
}

impl ScenarioError {
    /// I/O failures and unreadable input files are `Io`; everything else
    /// raised during a run is `Computation`.
    pub fn from_run(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Parse { .. } => ScenarioError::Io(e),
            other => ScenarioError::Computation(other),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Validation(_) => EXIT_VALIDATION,
            ScenarioError::Computation(_) => EXIT_COMPUTATION,
            ScenarioError::Io(_) => EXIT_IO,
        }
    }

    pub fn to_json(&self) -> String {
        let doc = match self {
            ScenarioError::Validation(issues) => ErrorDoc {
                status: "validation_error",
                exit_code: self.exit_code(),
                message: format!("{} problem(s) in the config", issues.len()),
                issues: Some(issues),
            },
            ScenarioError::Computation(e) => ErrorDoc {
                status: "computation_error",
                exit_code: self.exit_code(),
                message: e.to_string(),
                issues: None,
            },
            ScenarioError::Io(e) => ErrorDoc {
                status: "io_error",
                exit_code: self.exit_code(),
                message: e.to_string(),
                issues: None,
            },
        };
        serde_json::to_string(&doc).expect("error document serializes")
    }
}
