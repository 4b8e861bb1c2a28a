use alloc::vec::Vec;
use core::ops::Range;

use ndarray::ArrayView2;

use crate::error::{degenerate, Error, Result};

use super::regression::{fit_log_log, SlopeFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Time,
    Space,
}

/// Rectangular block of nodes `rows x cols`; a lagged pair counts when both
/// of its nodes lie inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeWindow {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl NodeWindow {
    pub fn new(rows: Range<usize>, cols: Range<usize>) -> Self {
        Self { rows, cols }
    }

    fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.cols.is_empty()
    }
}

/// Second-order structure function `E |f(. + l) - f(.)|^2` per lag,
/// averaged over ensemble members and node pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunction {
    pub axis: Axis,
    pub lags: Vec<f64>,
    pub moments: Vec<f64>,
    /// Number of squared differences behind each moment.
    pub counts: Vec<usize>,
}

impl StructureFunction {
    /// Moment order; every estimate here is a second moment.
    pub const Q: u32 = 2;
}

/// Lag steps (in cells) from 2 up to an eighth of `n_cells`, roughly
/// geometric, without repeats. The unit lag is skipped to avoid grid-scale
/// aliasing.
pub fn fit_window_lags(n_cells: usize) -> Vec<usize> {
    let top = (n_cells / 8).max(2);
    let mut out: Vec<usize> = Vec::new();
    let mut x = 2.0f64;
    while (x as usize) <= top {
        let l = libm::round(x) as usize;
        if out.last() != Some(&l) && l <= top {
            out.push(l);
        }
        x *= 1.25;
    }
    out
}

/// Structure function along `axis` at lags `lag_steps * step`.
pub fn structure_function(
    ensemble: &[ArrayView2<f64>],
    axis: Axis,
    lag_steps: &[usize],
    step: f64,
    window: &NodeWindow,
) -> Result<StructureFunction> {
    if ensemble.is_empty() {
        return Err(degenerate!("empty ensemble"));
    }
    if window.is_empty() {
        return Err(degenerate!("empty interior window"));
    }
    if lag_steps.is_empty() || lag_steps.windows(2).any(|w| w[0] >= w[1]) || lag_steps[0] == 0 {
        return Err(degenerate!("lags must be positive and strictly increasing"));
    }
    let shape = ensemble[0].dim();
    if window.rows.end > shape.0 || window.cols.end > shape.1 {
        return Err(Error::Shape {
            expected: shape,
            got: (window.rows.end, window.cols.end),
        });
    }
    if let Some(f) = ensemble.iter().find(|f| f.dim() != shape) {
        return Err(Error::Shape {
            expected: shape,
            got: f.dim(),
        });
    }
    let span = match axis {
        Axis::Time => window.rows.len(),
        Axis::Space => window.cols.len(),
    };
    let mut moments = Vec::with_capacity(lag_steps.len());
    let mut counts = Vec::with_capacity(lag_steps.len());
    for &l in lag_steps {
        if l >= span {
            return Err(degenerate!("lag {l} does not fit in a window of {span} nodes"));
        }
        let mut acc = 0.0;
        let mut count = 0usize;
        for f in ensemble {
            match axis {
                Axis::Time => {
                    for i in window.rows.start..window.rows.end - l {
                        for j in window.cols.clone() {
                            let d = f[[i + l, j]] - f[[i, j]];
                            acc += d * d;
                        }
                    }
                    count += (span - l) * window.cols.len();
                }
                Axis::Space => {
                    for i in window.rows.clone() {
                        for j in window.cols.start..window.cols.end - l {
                            let d = f[[i, j + l]] - f[[i, j]];
                            acc += d * d;
                        }
                    }
                    count += (span - l) * window.rows.len();
                }
            }
        }
        moments.push(acc / count as f64);
        counts.push(count);
    }
    Ok(StructureFunction {
        axis,
        lags: lag_steps.iter().map(|&l| l as f64 * step).collect(),
        moments,
        counts,
    })
}

/// Hölder estimate `slope / 2` of `log moment` against `log lag`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderFit {
    pub exponent: f64,
    pub ci_halfwidth: f64,
    /// The underlying log-log regression (slope = 2 * exponent).
    pub log_log: SlopeFit,
}

impl HolderFit {
    /// Whether `exponent +- ci` meets the open interval `(lo, hi)`.
    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.exponent - self.ci_halfwidth < hi && self.exponent + self.ci_halfwidth > lo
    }
}

pub fn holder_exponent(sf: &StructureFunction) -> Result<HolderFit> {
    if sf.lags.len() < 4 {
        return Err(degenerate!("a Hölder fit needs at least 4 lags, got {}", sf.lags.len()));
    }
    if let Some(i) = sf.moments.iter().position(|&m| !(m > 0.0)) {
        return Err(degenerate!("moment at lag {} vanishes; the field is degenerate", sf.lags[i]));
    }
    let fit = fit_log_log(&sf.lags, &sf.moments)?;
    Ok(HolderFit {
        exponent: 0.5 * fit.slope,
        ci_halfwidth: 0.5 * fit.ci_halfwidth,
        log_log: fit,
    })
}
