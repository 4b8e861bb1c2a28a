use alloc::vec::Vec;

use ndarray::Array2;

use crate::error::{degenerate, Error, Result};
use crate::spde_solver::ThetaSweepResult;

use super::regression::{fit_log_log, SlopeFit};

/// Relative slack before a distance that shrinks while `|theta1 - theta2|`
/// grows is flagged.
pub const MONOTONE_TOLERANCE: f64 = 0.1;

/// Ensemble `sup_t sup_x E |c_a - c_b|^2` between the companions of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaDistances {
    pub thetas: Vec<f64>,
    pub d2: Array2<f64>,
    pub samples: usize,
}

/// Aggregates per-sample sweeps (same shifts, independent noise) into
/// ensemble distances.
pub fn ensemble_theta_distances(sweeps: &[ThetaSweepResult]) -> Result<ThetaDistances> {
    let first = sweeps.first().ok_or_else(|| degenerate!("no sweeps"))?;
    let k = first.thetas.len();
    for s in sweeps {
        if s.thetas != first.thetas {
            return Err(degenerate!("sweeps use different shifts"));
        }
    }
    let shape = first.solutions[0].grid().node_shape();
    if let Some(f) = sweeps.iter().flat_map(|s| &s.solutions).find(|f| f.grid().node_shape() != shape) {
        return Err(Error::Shape {
            expected: shape,
            got: f.grid().node_shape(),
        });
    }
    let cols = sweeps
        .iter()
        .flat_map(|s| &s.solutions)
        .map(|f| f.valid_columns())
        .min()
        .unwrap();
    let m = sweeps.len() as f64;
    let mut d2 = Array2::zeros((k, k));
    for a in 0..k {
        for b in (a + 1)..k {
            let mut worst = 0.0f64;
            for n in 0..shape.0 {
                for j in 0..cols {
                    let mean = sweeps
                        .iter()
                        .map(|s| {
                            let d = s.solutions[a].companion()[[n, j]] - s.solutions[b].companion()[[n, j]];
                            d * d
                        })
                        .sum::<f64>()
                        / m;
                    worst = worst.max(mean);
                }
            }
            d2[[a, b]] = worst;
            d2[[b, a]] = worst;
        }
    }
    Ok(ThetaDistances {
        thetas: first.thetas.clone(),
        d2,
        samples: sweeps.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaRateFit {
    /// Slope of `log d` against `log |theta1 - theta2|`.
    pub fit: SlopeFit,
    /// `(|theta1 - theta2|, d)` for every pair entering the fit.
    pub pairs: Vec<(f64, f64)>,
    /// Set when some distance drops by more than [`MONOTONE_TOLERANCE`]
    /// while the shift gap grows.
    pub non_monotone: bool,
}

pub fn theta_rate_fit(dist: &ThetaDistances) -> Result<ThetaRateFit> {
    if dist.samples < 2 {
        return Err(degenerate!("theta rates need ensemble distances, got {} sample", dist.samples));
    }
    let k = dist.thetas.len();
    let scale = dist.thetas.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let mut pairs = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let gap = (dist.thetas[a] - dist.thetas[b]).abs();
            if gap > 1e-12 * scale {
                pairs.push((gap, dist.d2[[a, b]]));
            }
        }
    }
    if pairs.len() < 3 {
        return Err(degenerate!("theta rates need 3 distinct pairs, got {}", pairs.len()));
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut non_monotone = false;
    for i in 0..pairs.len() {
        for j in (i + 1)..pairs.len() {
            if pairs[j].0 > pairs[i].0 && pairs[j].1 < (1.0 - MONOTONE_TOLERANCE) * pairs[i].1 {
                non_monotone = true;
            }
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let fit = fit_log_log(&x, &y)?;
    Ok(ThetaRateFit {
        fit,
        pairs,
        non_monotone,
    })
}
