//! Scenario-driven front end for `fluxguide`: loads a scenario file, runs the
//! planners, parameterises and simulates the chosen path, and writes CSV
//! artifacts with a JSON metrics summary.

pub mod error;
pub mod output;
pub mod pipeline;
pub mod report;
pub mod scenario;

pub use error::{CliError, Result};
pub use output::Metrics;
pub use pipeline::{run_scenario, Outcome, Stage};
pub use report::{compare_report, Report};
pub use scenario::Scenario;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Any error: bad scenario, I/O, numerical failure.
pub const EXIT_ERROR: i32 = 1;
/// A planner stopped without converging; partial outputs were written.
pub const EXIT_NOT_CONVERGED: i32 = 2;
