//! Discrete Laplacians on rectangle cell complexes with mixed boundary conditions, their
//! log-determinants and asymptotics, lattice Green's functions and dimer models.

pub mod asymptotics;
pub mod cli;
pub mod complex;
pub mod config;
pub mod dimerft;
pub mod error;
pub mod latticefn;
pub mod metric;
pub mod operators;
pub mod quad;
pub mod spectral;

pub use error::{Error, Result};

/// Scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
