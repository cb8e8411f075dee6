//! Sampling, reconstruction and wavelet transforms on the real line and on
//! the affine group `x -> a x + b`.

pub mod bandlimited;
pub mod error;
pub mod grid;
pub mod group;
pub mod quadrature;
pub mod reconstruct;
pub mod report;
pub mod sampling;
pub mod wavelet;

pub use error::{Error, Result};
pub use num_complex::Complex64;
