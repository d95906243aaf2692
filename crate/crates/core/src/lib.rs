//! Pseudospectral simulation and linear-stability analysis of the viscous
//! magneto-geostrophic active scalar equation on the periodic box `[0, 2π]³`.
//!
//! The drift `u = M[θ]` is a Fourier multiplier ([`multiplier`]); the scalar
//! is advanced with an integrating-factor Runge–Kutta scheme ([`evolve`]),
//! reconstructed from its Duhamel integral form by Picard iteration
//! ([`mild`]), and the linearization about `A sin(m x3)` is analysed with
//! continued fractions and a truncated-matrix oracle ([`stability`]).

pub mod checkpoint;
pub mod checks;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod evolve;
mod fft;
pub mod mild;
pub mod multiplier;
pub mod runner;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
pub use multiplier::{PhysicalParams, SymbolTable, SymbolValue};
pub use spectral::{Grid, NormSpec, PhysicalScalar, SpectralScalar};
