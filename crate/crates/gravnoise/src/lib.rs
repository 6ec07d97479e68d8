//! File formats, configuration and the command-line front end for
//! `gravnoise-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod scan;
pub mod suites;

pub use error::CliError;
