//! Library side of the `kscore` command-line tool: input ingestion, source
//! files for simulations, command execution and report serialization.

pub mod args;
pub mod commands;
pub mod ingest;
pub mod report;
pub mod source;

pub use commands::{run, CommandError};
pub use report::Report;
