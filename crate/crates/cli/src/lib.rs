//! Configuration, subcommand drivers and output serialization behind the `nhssh` binary.

pub mod commands;
pub mod config;
pub mod emit;
