//! Library side of the `geoduio` command-line tool.

pub mod commands;
pub mod description;
