//! Two-parameter fractional Brownian field: covariance algebra, exact
//! sampling, rectangular increments and integration of deterministic
//! integrands.

mod covariance;
mod hurst;
mod increments;
mod inner;
mod sampler;
mod volterra;

pub use covariance::{cov_1d, covariance};
pub use hurst::HurstPair;
pub use increments::{cell_increments, integrate_deterministic, CellIncrements, NoiseOrigin};
pub use inner::{
    lh2_inner, lh2_inner_with, moment_bound_norm, pair_weights, psi_kernel, psi_prefactor,
    rectangle_indicator, PairRule,
};
pub use sampler::{cov_1d_matrix, factorize_psd, sample_field, FieldSample, FieldSampler, PsdFactor};
pub use volterra::{
    analytic_c_h, kh_eval, kh_mixed_derivative, kh_star_indicator, KhKernel, VolterraQuadrature,
};
