//! Simulation and tomography toolkit for a photon-number-resolving homodyne
//! detector: a weak local oscillator mixed with the signal on a variable
//! beam splitter, followed by two time-multiplexed photon counters.

pub mod error;
pub mod fock;
pub mod formats;
pub mod linalg;
pub mod metrics;
pub mod povm;
pub mod tmd;
pub mod tomography;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64;
