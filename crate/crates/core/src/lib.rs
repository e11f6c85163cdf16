//! Homogenized conductivity and dispersion of periodic Hashin–Shtrikman
//! micro-structures built from core–coating balls, together with Apollonian
//! packings of the flat torus and independent numerical oracles.

pub mod cli;
pub mod corrector;
pub mod dispersion;
pub mod error;
pub mod geometry;
pub mod material;
pub mod minimizer;
pub mod oracle;
pub mod packing;
pub mod quadrature;
pub mod validate;

pub use error::{Error, Result};
