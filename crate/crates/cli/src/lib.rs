//! Config-driven pipeline around the `pnrhd` library: build POVMs, render
//! Wigner grids, simulate sweeps, reconstruct states and report merits.

pub mod commands;
pub mod config;

pub use commands::CliError;
pub use config::{ConfigErrors, RunConfig};
