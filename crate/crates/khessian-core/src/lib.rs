//! Algebraic core for k-Hessian operators: elementary symmetric polynomials
//! `σ_k`, their derivatives, Gårding cone membership, Maclaurin means and the
//! concave reformulation `F = σ_k^{1/k}`, together with a small dense
//! symmetric eigensolver.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default `std`
//! feature and enable `libm` to build without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
mod math;
pub mod matrix;
pub mod symfun;

pub use error::CoreError;
pub use matrix::{Eigen, SymMatrix};
pub use symfun::{ConeQuery, Spectrum};
