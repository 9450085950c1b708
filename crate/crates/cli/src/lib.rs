//! Problem files, experiment orchestration and reports for `hjj-core`.
//!
//! The `hjj` binary is a thin wrapper around [`run::run`].

pub mod error;
pub mod fixtures;
pub mod plot;
pub mod problem;
pub mod report;
pub mod run;
pub mod verify;

pub use error::{CliError, CliResult};
pub use problem::{load_problem, parse_problem, write_problem, Problem, ProblemFile};
pub use report::ExperimentReport;
pub use run::{run, RunOptions, RunOutcome, Status, Subcommand};
