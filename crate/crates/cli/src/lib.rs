//! Batch sessions over representation structures: configuration, a sentence
//! language, and the `starrep` command runner.

pub mod config;
pub mod dsl;
pub mod run;

pub use config::{load, Overrides, Session};
pub use run::{run_path, run_session, Report, EXIT_ASSERTION, EXIT_CONFIG, EXIT_NONCONVERGENT, EXIT_PASS};
