//! Configuration, file formats and the command layer of the binary.

pub mod commands;
pub mod config;
pub mod external;
pub mod io;
pub mod report;

pub use commands::{Context, Failure};
pub use config::RunConfig;
pub use external::evaluate_external;
pub use io::{ingest_grids, ingest_points, write_grids, write_points};
