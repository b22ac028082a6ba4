//! Spectral toolkit for the periodic generalized KdV equation.

pub mod bilinear;
pub mod continuation;
pub mod data;
pub mod energy;
pub mod error;
pub mod lattice;
pub mod multiplier;
pub mod solver;

pub use error::{Error, Result};
