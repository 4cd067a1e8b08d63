//! Quantum delta-kicked harmonic oscillator.
//!
//! The one-period Floquet operator of the kicked oscillator factorizes into a
//! diagonal kick `exp(-i mu cos(k q) / hbar)` followed by free harmonic
//! evolution, and free harmonic evolution over any time is a fractional
//! Fourier transform up to a global phase. This crate evolves wavefunctions
//! with an `O(N log N)` fractional Fourier transform, cross-checks it against
//! a Strang split-step propagator, builds and diagonalizes the Floquet matrix,
//! and provides the classical kicked map, Husimi functions and Poincaré
//! sections needed for quantum/classical comparisons.
//!
//! Units are dimensionless with `m = 1`; `omega` defaults to 1 and `hbar` to 1.

pub mod error;
pub mod fft;
pub mod frft;
pub mod harness;
pub mod matrix;
pub mod phase_space;
pub mod propagators;
pub mod qstate;
pub mod spectral;

pub use error::{KhoError, Result};
pub use num_complex::Complex64;
