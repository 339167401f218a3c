//! Computational laboratory for exponential sums over finite fields.
//!
//! The crate builds discrete-log tables for `F_q`, evaluates additive and
//! multiplicative characters, and computes Gauss, Jacobi and Kloosterman
//! sums along two independent routes each. On top of that it measures the
//! exact circle discrepancy of normalized Jacobi-sum families, computes their
//! moments by cyclic convolution over the character group, evaluates the
//! explicit discrepancy and moment bounds, and counts tensor invariants of
//! the Kloosterman monodromy groups by lattice-walk dynamic programming.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and fall back to plain iterators otherwise; see [`exec`].

pub mod characters;
pub mod dft;
pub mod discrepancy;
pub mod error;
pub mod exec;
pub mod exp_sums;
pub mod finite_field;
pub mod invariant_dims;
pub mod moments_bounds;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
