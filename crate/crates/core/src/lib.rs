//! Shared numerics for the strip/SDE laboratory: complex matrix helpers,
//! counter-based random streams, small statistics and the common error type.

pub mod error;
pub mod linalg;
pub mod rng;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub type CMat = nalgebra::DMatrix<C64>;
pub type RMat = nalgebra::DMatrix<f64>;
pub type CVec = nalgebra::DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}
