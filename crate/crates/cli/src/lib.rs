//! Batch runner: configuration parsing, scenario execution and result files.

pub mod config;
pub mod output;
pub mod run;
pub mod suite;

pub use config::{parse_config, ConfigError, ConfigErrors, RunConfig, Scenario};
pub use run::{run, Check, Report, RunError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;
pub const EXIT_CHECK: u8 = 4;
