//! Numerics for the stochastic heat equation on the half-line driven by a
//! space-time fractional noise with Hurst pair `H = (h1, h2)`.
//!
//! The crate is `no_std` (it needs `alloc`). It covers the Dirichlet heat
//! kernel, exact sampling of the fractional field, mild-form solvers for the
//! nonlocal and coupled equations, and the statistical estimators used to
//! check regularity and variance-growth properties of the solutions.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod error;
pub mod fractional_noise;
pub mod grid;
pub mod heat_kernel;
pub mod quadrature;
pub mod rng;
pub mod spde_solver;

pub use error::{Error, Result};
pub use grid::GridSpec;
