//! Problem files, CSV output, a threaded sweep, and the `singctl` command
//! line on top of `singctl-core`.

pub mod cli;
pub mod config;
pub mod csv;
pub mod sweep;

pub use config::{load_problem, parse_config, render_config, ConfigError};
