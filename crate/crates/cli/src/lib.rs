//! Scenario-driven front end: TOML configs in, CSV tables and a JSON
//! manifest out.

pub mod config;
pub mod error;
pub mod output;
pub mod tasks;

pub use config::{Scenario, Task};
pub use error::CliError;
pub use tasks::{execute, run, RunOptions, RunReport, TaskOutput};
