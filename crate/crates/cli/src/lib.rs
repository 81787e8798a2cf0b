//! Command-line pipeline: CSV ingestion, joint fitting and table export.

pub mod error;
pub mod io;
pub mod pipeline;

pub use error::{CliError, Result};
pub use io::{ingest_joint, read_table, JointInput, Table};
pub use pipeline::{run_pipeline, Command, RunConfig};
