//! Command-line front end: polynomial parsing, run configuration, canonical
//! JSON, PPM rendering and the subcommand pipelines.

pub mod commands;
pub mod config;
pub mod json;
pub mod parse;
pub mod render;

pub use commands::{run, CliError, Outcome};
pub use config::RunConfig;
