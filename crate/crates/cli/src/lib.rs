//! Command-line front end for `ngm-core`: JSON configs in, JSON or CSV reports out.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod json;
pub mod verify;

pub use commands::{Format, Output};
pub use error::{CliError, Result};
