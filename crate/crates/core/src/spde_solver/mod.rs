//! Mild-form solvers for the nonlocal equation
//!
//! ```text
//! du = (1/2) u_xx dt + g(u, u^theta) dt + B^H(dt, dx),   u^theta(t, x) = (u(t, x + theta) - u(t, x)) / theta
//! ```
//!
//! on `[0, T] x [0, L]` with `u(t, 0) = 0`, and for the coupled system
//! where `u^theta` is replaced by `v = du/dx`.

mod config;
mod convolution;
mod drift;
mod field;
mod solver;

pub use config::{snap_theta, SolveMode, SolverConfig};
pub use convolution::{gradient_convolution, stochastic_convolution, ConvolutionKernel};
pub use drift::DriftSpec;
pub use field::{
    sup_mean_square_distance, sup_time_mean_square_distance, CompanionKind, Component,
    SolutionField, SolutionMeta,
};
pub use solver::{
    picard_solve, solve_coupled, solve_nonlocal, theta_sweep, IterationTrace, MildOperators,
    PicardStart, PreparedNoise, ThetaSweepResult,
};

#[cfg(test)]
mod tests;
