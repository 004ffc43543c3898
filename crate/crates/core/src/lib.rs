//! Pseudo-spectral laboratory for the massless Maxwell–Dirac system in
//! Coulomb gauge on periodic grids.

pub mod checks;
pub mod clifford;
pub mod error;
pub mod evolve;
pub mod grid;
pub mod nonlinearity;
pub mod nullform;
pub mod parametrix;
pub mod par;
pub mod spinor;

pub use error::{Error, Result};
