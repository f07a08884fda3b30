//! Command-line front end for the aspiration-learning toolkit: config
//! loading and overriding, the four subcommands, and deterministic
//! CSV/JSON output files.

pub mod commands;
pub mod config;
pub mod csvio;
