//! Library side of the `crp` command-line tool: file formats and command
//! implementations, kept callable for tests.

pub mod commands;
pub mod formats;
