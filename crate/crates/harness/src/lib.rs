//! File formats, experiment orchestration and the verification battery
//! behind the `glauber` command line.

pub mod benchmark;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod report;
pub mod verify;

pub use error::{HarnessError, Result};
