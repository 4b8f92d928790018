//! Std companion to `failnet-core`: model files, result emission, parallel
//! optimizer drivers and the `failnet` command line.

pub mod cli;
pub mod emit;
pub mod error;
pub mod model_io;
pub mod parallel;

pub use error::{exit, CliError, Result};
