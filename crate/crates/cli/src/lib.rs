//! Library side of the `krotov-oct` command: config loading, table and CSV
//! output, and the subcommands themselves.

pub mod commands;
pub mod config;
pub mod csv;
pub mod table;
