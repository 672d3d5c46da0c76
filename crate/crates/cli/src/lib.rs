//! Batch driver: JSON configurations in, CSV and JSON artifacts out.

pub mod commands;
pub mod config;

pub use commands::{execute, Command, Status};
pub use config::{RunConfig, ValidationError, SCHEMA};
