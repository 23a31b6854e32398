//! Command-line front end for `prophet-core`: loads JSON instance and rule
//! files, runs analyses, simulations, certificate suites and threshold sweeps,
//! and writes byte-reproducible reports.
//!
//! Exit codes: 0 when everything passed, 1 when a certificate failed, 2 for
//! input errors, 3 for numerical failures.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;

pub use args::Cli;
pub use commands::{run, Outcome};
pub use error::{CliError, CliResult};
