//! Library surface of the batch front-end, so integration tests can drive
//! config assembly, command execution, and manifest validation directly.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{cmd_bench, cmd_certify, cmd_demo, cmd_run, DemoFamily};
pub use config::{Backend, CommonArgs, ExperimentConfig, OutputFormat};
pub use manifest::{strip_timings, validate_records, Manifest};
