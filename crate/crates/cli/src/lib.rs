//! Configuration, dispatch and reporting for the `setquant` binary.
//!
//! A run is described by a TOML file. [`parse_config`] validates it against
//! the built-in system tables, [`dispatch`] runs it and writes `report.json`,
//! `cells.csv`, `slices.csv` and friends into the output directory, and
//! [`compare_runs`] diffs two such directories cell by cell.

pub mod compare;
pub mod config;
pub mod error;
pub mod run;

pub use compare::{compare_runs, load_run, summary_table, Comparison, RunArtifacts};
pub use config::{parse_config, Algorithm, HyperConfig, Options, RunConfig, SystemConfig};
pub use error::{CliError, Code, ConfigError};
pub use run::{dispatch, resolve_output_dir, scenario_policy, Report, RunOutcome};

/// Exit code of a usage or configuration error.
pub const EXIT_USAGE: i32 = 2;
