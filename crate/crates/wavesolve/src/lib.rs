//! Experiment runner for wavelet-preconditioned linear systems: manifests, CSV and SVG
//! artifacts, and the command implementations behind the `wavesolve` binary.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod output;
pub mod plot;

pub use commands::{run, RunSummary};
pub use error::{CliError, CliResult};
pub use manifest::{Command, Manifest};
