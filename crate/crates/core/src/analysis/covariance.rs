use alloc::vec::Vec;

use ndarray::{Array2, ArrayView2};

use crate::error::{degenerate, Error, Result};
use crate::fractional_noise::{covariance, HurstPair};
use crate::grid::GridSpec;

/// Minimum ensemble size for covariance and variance estimates.
pub const MIN_SAMPLES: usize = 100;

/// Per-entry probability that a centered Gaussian estimate lands beyond
/// four standard errors.
pub const FOUR_SE_TAIL: f64 = 6.334e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    /// Node indices `(i, j)` of the subset, in row-major order.
    pub nodes: Vec<(usize, usize)>,
    pub empirical: Array2<f64>,
    pub analytic: Array2<f64>,
    /// Standard error of each empirical entry, `std(products) / sqrt(M)`.
    pub standard_error: Array2<f64>,
    pub max_abs_error: f64,
    /// Distinct entries (`a <= b`) with `|empirical - analytic| > 4 SE`.
    pub exceedances: usize,
    pub samples: usize,
}

impl CovarianceReport {
    pub fn distinct_entries(&self) -> usize {
        let k = self.nodes.len();
        k * (k + 1) / 2
    }

    /// Expected number of 4-SE exceedances when every entry is unbiased.
    pub fn expected_false_positives(&self) -> f64 {
        FOUR_SE_TAIL * self.distinct_entries() as f64
    }

    /// Exceedance count within the 99% Poisson budget of an unbiased
    /// estimator.
    pub fn passes(&self) -> bool {
        self.exceedances <= false_positive_budget(self.expected_false_positives(), 0.99)
    }
}

/// Smallest `c` with `P(Poisson(mean) <= c) >= level`.
pub fn false_positive_budget(mean: f64, level: f64) -> usize {
    let mut term = libm::exp(-mean);
    let mut cdf = term;
    let mut c = 0;
    while cdf < level && c < 10_000 {
        c += 1;
        term *= mean / c as f64;
        cdf += term;
    }
    c
}

/// Sample covariance of a node subset across `fields`, compared entrywise
/// with the analytic covariance of the Hurst pair.
pub fn empirical_covariance(
    fields: &[ArrayView2<f64>],
    nodes: &[(usize, usize)],
    hurst: &HurstPair,
    grid: &GridSpec,
) -> Result<CovarianceReport> {
    let m = fields.len();
    if m < MIN_SAMPLES {
        return Err(degenerate!("covariance estimates need at least {MIN_SAMPLES} samples, got {m}"));
    }
    if nodes.is_empty() {
        return Err(degenerate!("empty node subset"));
    }
    let shape = grid.node_shape();
    if let Some(f) = fields.iter().find(|f| f.dim() != shape) {
        return Err(Error::Shape {
            expected: shape,
            got: f.dim(),
        });
    }
    if let Some(&(i, j)) = nodes.iter().find(|&&(i, j)| i >= shape.0 || j >= shape.1) {
        return Err(Error::Shape {
            expected: shape,
            got: (i + 1, j + 1),
        });
    }
    let k = nodes.len();
    let mf = m as f64;
    let mut data = Array2::<f64>::zeros((m, k));
    for (r, f) in fields.iter().enumerate() {
        for (c, &(i, j)) in nodes.iter().enumerate() {
            data[[r, c]] = f[[i, j]];
        }
    }
    let means: Vec<f64> = (0..k).map(|c| data.column(c).sum() / mf).collect();
    for c in 0..k {
        let mu = means[c];
        data.column_mut(c).mapv_inplace(|v| v - mu);
    }
    let mut empirical = Array2::zeros((k, k));
    let mut se = Array2::zeros((k, k));
    let mut analytic = Array2::zeros((k, k));
    for a in 0..k {
        for b in a..k {
            let (xa, xb) = (data.column(a), data.column(b));
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for (p, q) in xa.iter().zip(xb) {
                let prod = p * q;
                s1 += prod;
                s2 += prod * prod;
            }
            let mean_prod = s1 / mf;
            let var_prod = ((s2 / mf) - mean_prod * mean_prod).max(0.0) * mf / (mf - 1.0);
            let cov = s1 / (mf - 1.0);
            let (ia, ja) = nodes[a];
            let (ib, jb) = nodes[b];
            let r = covariance(hurst, grid.t(ia), grid.t(ib), grid.x(ja), grid.x(jb))?;
            for (p, q) in [(a, b), (b, a)] {
                empirical[[p, q]] = cov;
                se[[p, q]] = libm::sqrt(var_prod / mf);
                analytic[[p, q]] = r;
            }
        }
    }
    let mut max_abs_error = 0.0f64;
    let mut exceedances = 0;
    for a in 0..k {
        for b in a..k {
            let d = (empirical[[a, b]] - analytic[[a, b]]).abs();
            max_abs_error = max_abs_error.max(d);
            if d > 4.0 * se[[a, b]] {
                exceedances += 1;
            }
        }
    }
    Ok(CovarianceReport {
        nodes: nodes.to_vec(),
        empirical,
        analytic,
        standard_error: se,
        max_abs_error,
        exceedances,
        samples: m,
    })
}

/// `rows x cols` evenly spread interior nodes, skipping the axes.
pub fn node_subset(grid: &GridSpec, rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let pick = |n: usize, k: usize| -> Vec<usize> {
        (1..=k).map(|a| (a * n + k / 2) / k).map(|v| v.clamp(1, n)).collect()
    };
    let ts = pick(grid.n_t(), rows);
    let xs = pick(grid.n_x(), cols);
    ts.iter().flat_map(|&i| xs.iter().map(move |&j| (i, j))).collect()
}
