//! Estimators that turn ensembles of fields and solutions into regularity
//! exponents, covariance checks, variance-growth slopes and shift rates.

mod covariance;
mod growth;
mod regression;
mod structure;
mod theta;

pub use covariance::{
    empirical_covariance, false_positive_budget, node_subset, CovarianceReport, FOUR_SE_TAIL,
    MIN_SAMPLES,
};
pub use growth::{variance_growth_slope, variance_profile, VarianceProfile};
pub use regression::{fit_line, fit_log_log, t_quantile_975, SlopeFit};
pub use structure::{
    fit_window_lags, holder_exponent, structure_function, Axis, HolderFit, NodeWindow,
    StructureFunction,
};
pub use theta::{ensemble_theta_distances, theta_rate_fit, ThetaDistances, ThetaRateFit, MONOTONE_TOLERANCE};
