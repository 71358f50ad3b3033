//! Simulation and reconstruction of biphoton spectral wavefunctions from
//! two-parameter Hong–Ou–Mandel coincidence maps.
//!
//! The pipeline runs forward from crystal dispersion ([`dispersion`]) and
//! spatial mode projection ([`spdc`]) to a coincidence map
//! ([`interference`]), and backward from a map to the complex spectral
//! wavefunction and delay distribution ([`reconstruction`]).

pub mod cli;
pub mod dispersion;
pub mod error;
pub mod interference;
pub mod reconstruction;
pub mod spdc;
pub mod spectral;

pub use error::{Error, Result};
