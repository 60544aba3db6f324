//! Configuration, CSV I/O and subcommands of the `respdyn` tool.

pub mod commands;
pub mod config;
pub mod table;
