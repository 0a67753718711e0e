//! Configuration documents and CSV emission.

pub mod config;
pub mod csv;

pub use config::{parse_config, parse_config_with, Overrides, RunConfig, Settings, Source};
pub use csv::emit_table;
