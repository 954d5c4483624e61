//! IO, file formats and subcommands behind the `corrproj` binary.

pub mod commands;
pub mod config;
pub mod table;
