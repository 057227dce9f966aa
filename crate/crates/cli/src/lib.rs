//! Scenario runner behind the `abp-verify` binary.

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
pub mod density;
pub mod riccati;
pub mod run;
pub mod svg;

pub use catalog::{catalog, CheckId};
pub use config::{load_config, parse_config, Config, ConfigError};
pub use run::{run_config, write_outputs, RunOptions, RunReport};
