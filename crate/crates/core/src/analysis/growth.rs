use alloc::vec::Vec;

use ndarray::ArrayView2;

use crate::error::{degenerate, Error, Result};
use crate::fractional_noise::HurstPair;
use crate::grid::GridSpec;

use super::covariance::MIN_SAMPLES;
use super::regression::{fit_log_log, SlopeFit};

/// Variance profile `Var Z(t_n, x)` over time at one space node.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    pub times: Vec<f64>,
    pub variances: Vec<f64>,
}

pub fn variance_profile(ensemble: &[ArrayView2<f64>], x_index: usize, grid: &GridSpec) -> Result<VarianceProfile> {
    let m = ensemble.len();
    if m < 2 {
        return Err(degenerate!("a variance needs at least 2 samples"));
    }
    let shape = grid.node_shape();
    if let Some(f) = ensemble.iter().find(|f| f.dim() != shape) {
        return Err(Error::Shape {
            expected: shape,
            got: f.dim(),
        });
    }
    if x_index == 0 || x_index > grid.n_x() {
        return Err(degenerate!("x_index {x_index} is not an interior node"));
    }
    let mf = m as f64;
    let mut times = Vec::new();
    let mut variances = Vec::new();
    for n in 0..=grid.n_t() {
        let mean = ensemble.iter().map(|f| f[[n, x_index]]).sum::<f64>() / mf;
        let var = ensemble
            .iter()
            .map(|f| {
                let d = f[[n, x_index]] - mean;
                d * d
            })
            .sum::<f64>()
            / (mf - 1.0);
        times.push(grid.t(n));
        variances.push(var);
    }
    Ok(VarianceProfile { times, variances })
}

/// Log-log slope of `Var Z(t, x)` against `t` over the window `[T/4, T]`.
/// The expected value is `2 h1 + h2 - 1`, see [`HurstPair::growth_exponent`].
pub fn variance_growth_slope(
    convolutions: &[ArrayView2<f64>],
    x_index: usize,
    grid: &GridSpec,
    hurst: &HurstPair,
) -> Result<SlopeFit> {
    // HurstPair already excludes h <= 1/2; keep the check local as well
    if hurst.h1() <= 0.5 || hurst.h2() <= 0.5 {
        return Err(degenerate!("variance growth is defined for h1, h2 > 1/2"));
    }
    if convolutions.len() < MIN_SAMPLES {
        return Err(degenerate!(
            "variance growth needs at least {MIN_SAMPLES} samples, got {}",
            convolutions.len()
        ));
    }
    let profile = variance_profile(convolutions, x_index, grid)?;
    let t_lo = 0.25 * grid.horizon() * (1.0 - 1e-12);
    let (t, v): (Vec<f64>, Vec<f64>) = profile
        .times
        .iter()
        .zip(&profile.variances)
        .filter(|(t, _)| **t >= t_lo)
        .map(|(t, v)| (*t, *v))
        .unzip();
    if t.len() < 5 {
        return Err(degenerate!("the window [T/4, T] holds only {} time points", t.len()));
    }
    if let Some(i) = v.iter().position(|&x| !(x > 0.0)) {
        return Err(degenerate!("zero variance at t = {}", t[i]));
    }
    fit_log_log(&t, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn synthetic_power_growth() {
        // Z(t, x) = s_k t^{0.65} with s_k = +-1 has variance ~ t^{1.3}
        let g = GridSpec::new(2.0, 1.0, 16, 4).unwrap();
        let fields: Vec<Array2<f64>> = (0..100)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                Array2::from_shape_fn(g.node_shape(), |(n, _)| s * libm::pow(g.t(n), 0.65))
            })
            .collect();
        let v: Vec<_> = fields.iter().map(|f| f.view()).collect();
        let h = HurstPair::new(0.8, 0.7).unwrap();
        let fit = variance_growth_slope(&v, 2, &g, &h).unwrap();
        assert!((fit.slope - 1.3).abs() < 1e-12);
    }

    #[test]
    fn guards() {
        let g = GridSpec::new(1.0, 1.0, 16, 4).unwrap();
        let h = HurstPair::new(0.8, 0.7).unwrap();
        let f = Array2::<f64>::zeros(g.node_shape());
        let few: Vec<_> = (0..10).map(|_| f.view()).collect();
        assert!(variance_growth_slope(&few, 2, &g, &h).is_err());
        let many: Vec<_> = (0..100).map(|_| f.view()).collect();
        assert!(variance_growth_slope(&many, 2, &g, &h).is_err());
        assert!(HurstPair::new(0.5, 0.9).is_err());
        let coarse = GridSpec::new(1.0, 1.0, 4, 4).unwrap();
        let fc = Array2::<f64>::from_elem(coarse.node_shape(), 1.0);
        let v: Vec<_> = (0..100).map(|_| fc.view()).collect();
        assert!(variance_growth_slope(&v, 2, &coarse, &h).is_err());
    }
}
