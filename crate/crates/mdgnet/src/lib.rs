//! File formats, configuration, parallel drivers and subcommands for the
//! `mdgnet` command-line tool. The numerics live in `mdgnet-core`.

pub mod commands;
pub mod config;
mod error;
pub mod formats;
pub mod pipeline;

pub use error::{Error, Result};
