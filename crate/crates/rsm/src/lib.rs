//! Files, configuration, reports and the command line around `rsm-core`.
//!
//! The binary `rsm` is a thin wrapper over [`commands`]; everything it does is
//! also reachable in-process.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod parallel;
pub mod report;

pub use error::{CliError, CliResult};
