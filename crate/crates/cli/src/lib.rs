//! Library half of the `byzest` command: config parsing, trace output and
//! the subcommand bodies, kept here so integration tests can reach them.

pub mod commands;
pub mod config;
pub mod figure1;
pub mod trace_io;
