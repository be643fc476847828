//! Spectral Galerkin tools for the cubic Szego equation on the torus and the
//! transport of Gaussian measures under its flow.

pub mod bump;
pub mod constant;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod gaussian;
pub mod grid;
pub mod kernel;
pub mod multiplier;
pub mod norms;
pub mod observables;
pub mod ode;
pub mod para;
pub mod projector;
pub mod quadrature;
pub mod spectrum;
pub mod stats;

#[cfg(test)]
pub(crate) mod testing;

pub use error::{Result, SzegoError};
pub use num_complex::Complex64;
pub use spectrum::{PlusSpectrum, TwoSidedSpectrum};
