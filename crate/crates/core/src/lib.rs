//! Branching-process Monte-Carlo solver for semilinear hyperbolic and
//! high-order Cauchy problems.
//!
//! A solution value `u(t, x)` is the expectation of a functional of a weighted
//! Galton-Watson tree: leaves evaluate the initial data at positions drawn from
//! the problem's Green functions, branching nodes carry the coefficients of the
//! polynomial nonlinearity.

pub mod branching;
pub mod error;
pub mod estimator;
pub mod functional;
pub mod kernels;
pub mod problems;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result};
pub use num_complex::Complex64;
