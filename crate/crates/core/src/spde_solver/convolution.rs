use alloc::vec::Vec;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, ArrayViewMut2};

use crate::error::{Error, Result};
use crate::fractional_noise::CellIncrements;
use crate::grid::GridSpec;
use crate::heat_kernel::{kernel_unchecked, KernelKind};

/// `out[n] += scale * sum_{m=1..=n} lags[m-1] src[n-m]` for every row `n`,
/// one matrix product per lag.
pub(crate) fn lag_convolve(lags: &[Array2<f64>], src: ArrayView2<f64>, scale: f64, mut out: ArrayViewMut2<f64>) {
    let rows = out.nrows();
    for (idx, k) in lags.iter().enumerate() {
        let m = idx + 1;
        if m >= rows {
            break;
        }
        let n_src = (rows - m).min(src.nrows());
        let lhs = src.slice(s![..n_src, ..]);
        let mut dst = out.slice_mut(s![m..m + n_src, ..]);
        general_mat_mul(scale, &lhs, &k.t(), 1.0, &mut dst);
    }
}

/// Kernel tables for the noise convolution
/// `Z(t_n, x_j) = sum_{i<n, k} K(t_n - s_mid_i, x_j, y_mid_k) d2[i][k]`.
///
/// `t_n - s_mid_i = (n - i - 1/2) dt`, so the newest layer sits at lag
/// `dt / 2` and the kernel is never evaluated at zero time.
#[derive(Debug, Clone)]
pub struct ConvolutionKernel {
    kind: KernelKind,
    grid: GridSpec,
    lags: Vec<Array2<f64>>,
}

impl ConvolutionKernel {
    pub fn new(kind: KernelKind, grid: &GridSpec) -> Self {
        let (nt, nx) = (grid.n_t(), grid.n_x());
        let lags = (1..=nt)
            .map(|m| {
                let tau = (m as f64 - 0.5) * grid.dt();
                Array2::from_shape_fn((nx + 1, nx), |(j, k)| {
                    kernel_unchecked(kind, tau, grid.x(j), grid.x_mid(k))
                })
            })
            .collect();
        Self {
            kind,
            grid: *grid,
            lags,
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn apply(&self, inc: &CellIncrements) -> Result<Array2<f64>> {
        if inc.grid() != &self.grid {
            return Err(Error::Shape {
                expected: self.grid.cell_shape(),
                got: inc.grid().cell_shape(),
            });
        }
        let mut z = Array2::zeros(self.grid.node_shape());
        lag_convolve(&self.lags, inc.d2().view(), 1.0, z.view_mut());
        Ok(z)
    }
}

/// Noise response `int_0^t int_D p(t - s, x, y) B^H(ds, dy)` on the node
/// lattice. Row 0 and column 0 vanish.
pub fn stochastic_convolution(inc: &CellIncrements, grid: &GridSpec) -> Result<Array2<f64>> {
    ConvolutionKernel::new(KernelKind::P, grid).apply(inc)
}

/// Same as [`stochastic_convolution`] with `dp/dx` in place of `p`.
pub fn gradient_convolution(inc: &CellIncrements, grid: &GridSpec) -> Result<Array2<f64>> {
    ConvolutionKernel::new(KernelKind::Dx, grid).apply(inc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional_noise::{cell_increments, sample_field, HurstPair};
    use crate::heat_kernel::p_eval;

    #[test]
    fn zero_noise_gives_zero() {
        let g = GridSpec::new(1.0, 3.0, 6, 9).unwrap();
        let z = stochastic_convolution(&CellIncrements::zeros(g), &g).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_direct_sum() {
        let g = GridSpec::new(0.5, 2.0, 7, 11).unwrap();
        let h = HurstPair::new(0.8, 0.7).unwrap();
        let inc = cell_increments(&sample_field(&h, &g, 5));
        let z = stochastic_convolution(&inc, &g).unwrap();
        for n in 0..=7 {
            for j in 0..=11 {
                let mut acc = 0.0;
                for i in 0..n {
                    for k in 0..11 {
                        acc += p_eval(g.t(n) - g.t_mid(i), g.x(j), g.x_mid(k)).unwrap() * inc.d2()[[i, k]];
                    }
                }
                assert!((z[[n, j]] - acc).abs() < 1e-13 * (1.0 + acc.abs()));
            }
        }
        assert!(z.row(0).iter().all(|&v| v == 0.0));
        assert!(z.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_foreign_grid() {
        let g = GridSpec::new(1.0, 3.0, 6, 9).unwrap();
        let other = GridSpec::new(1.0, 3.0, 6, 10).unwrap();
        assert!(stochastic_convolution(&CellIncrements::zeros(other), &g).is_err());
    }
}
