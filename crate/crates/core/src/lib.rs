//! Spectral fixed-point solver and verifier for exponentially localised,
//! time-periodic breathers of nonlinearly coupled particle chains.

pub mod cli;
pub mod error;
pub mod field;
pub mod lattice;
pub mod operators;
pub mod solver;
pub mod validation;

pub use error::{Error, Result};
