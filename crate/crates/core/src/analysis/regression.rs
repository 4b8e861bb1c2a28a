use crate::error::{degenerate, Result};

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Half-width of the 95% confidence interval of the slope, from the
    /// regression residuals with `n - 2` degrees of freedom.
    pub ci_halfwidth: f64,
}

impl SlopeFit {
    pub fn ci(&self) -> (f64, f64) {
        (self.slope - self.ci_halfwidth, self.slope + self.ci_halfwidth)
    }

    /// Whether `[slope - ci, slope + ci]` meets the open interval `(lo, hi)`.
    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        let (a, b) = self.ci();
        a < hi && b > lo
    }
}

/// Two-sided 97.5% Student-t quantiles for 1..=30 degrees of freedom.
const T975: [f64; 30] = [
    12.706_204_736, 4.302_652_730, 3.182_446_305, 2.776_445_105, 2.570_581_836, 2.446_911_851,
    2.364_624_252, 2.306_004_135, 2.262_157_163, 2.228_138_852, 2.200_985_160, 2.178_812_830,
    2.160_368_656, 2.144_786_688, 2.131_449_546, 2.119_905_299, 2.109_815_578, 2.100_922_040,
    2.093_024_054, 2.085_963_447, 2.079_613_845, 2.073_873_068, 2.068_657_610, 2.063_898_562,
    2.059_538_553, 2.055_529_439, 2.051_830_516, 2.048_407_142, 2.045_229_642, 2.042_272_456,
];

/// 0.975 quantile of Student's t with `dof` degrees of freedom.
///
/// Tabulated up to 30; beyond that the Cornish-Fisher expansion around the
/// normal quantile, accurate to about 1e-5.
pub fn t_quantile_975(dof: usize) -> f64 {
    assert!(dof > 0, "Student t needs at least one degree of freedom");
    if dof <= 30 {
        return T975[dof - 1];
    }
    let z = 1.959_963_984_540_054;
    let n = dof as f64;
    let z3 = z * z * z;
    let z5 = z3 * z * z;
    let z7 = z5 * z * z;
    z + (z3 + z) / (4.0 * n)
        + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * n * n)
        + (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * n * n * n)
}

/// Ordinary least squares on `(x, y)` pairs. Needs at least three points
/// and two distinct abscissae.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if x.len() != y.len() {
        return Err(degenerate!("{} abscissae but {} ordinates", x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(degenerate!("a slope with a confidence interval needs 3 points, got {n}"));
    }
    if let Some(i) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(degenerate!("non-finite regression input at flat index {i}"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(degenerate!("all abscissae coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let se = libm::sqrt(sse / (nf - 2.0) / sxx);
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        ci_halfwidth: t_quantile_975(n - 2) * se,
    })
}

/// [`fit_line`] on `(ln x, ln y)`.
pub fn fit_log_log(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if let Some(i) = x.iter().chain(y).position(|&v| !(v > 0.0)) {
        return Err(degenerate!("log-log fit needs positive data, entry {i} is not"));
    }
    let lx: alloc::vec::Vec<f64> = x.iter().map(|&v| libm::log(v)).collect();
    let ly: alloc::vec::Vec<f64> = y.iter().map(|&v| libm::log(v)).collect();
    fit_line(&lx, &ly)
}
