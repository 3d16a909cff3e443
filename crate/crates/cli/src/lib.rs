//! Batch workbench around the `shear-spectra` library: configs, runs, manifests, reports.

pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod run;

pub use config::{Config, Tolerances};
pub use error::{CliError, Result};
pub use io::{RunManifest, SweepCache};
pub use run::{run, Command, RunContext};
