use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{s, Array2};

use crate::error::{domain, Result};
use crate::grid::GridSpec;
use crate::rng::NormalStream;

use super::covariance::cov_1d_unchecked;
use super::HurstPair;

/// Fraction of the trace that may be discarded by eigenvalue clipping
/// before a warning is emitted.
const CLIP_WARN_FRACTION: f64 = 1e-8;

/// Values of `B^H` on the grid nodes, `values[[i, j]] = B^H(t_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    values: Array2<f64>,
    hurst: HurstPair,
    grid: GridSpec,
    seed: u64,
}

impl FieldSample {
    /// Wraps externally produced values (e.g. a decoded dump). The axes
    /// `t = 0` and `x = 0` must vanish.
    pub fn from_parts(values: Array2<f64>, hurst: HurstPair, grid: GridSpec, seed: u64) -> Result<Self> {
        if values.dim() != grid.node_shape() {
            return Err(crate::Error::Shape {
                expected: grid.node_shape(),
                got: values.dim(),
            });
        }
        if values.row(0).iter().chain(values.column(0).iter()).any(|&v| v != 0.0) {
            return Err(domain!("field values must vanish on the axes t = 0 and x = 0"));
        }
        Ok(Self { values, hurst, grid, seed })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn hurst(&self) -> &HurstPair {
        &self.hurst
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Square-root factor `F` with `F F^T ~ C` for a symmetric PSD matrix.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    pub factor: Array2<f64>,
    /// Sum of clipped negative eigenvalues over the trace; zero when the
    /// Cholesky factorization succeeded.
    pub clipped_fraction: f64,
}

/// Cholesky factor of `c`, falling back to an eigen-decomposition with
/// negative eigenvalues clipped at zero.
pub fn factorize_psd(c: &Array2<f64>) -> PsdFactor {
    let n = c.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| c[[i, j]]);
    if let Some(ch) = m.clone().cholesky() {
        let l = ch.l();
        return PsdFactor {
            factor: Array2::from_shape_fn((n, n), |(i, j)| l[(i, j)]),
            clipped_fraction: 0.0,
        };
    }
    let trace: f64 = (0..n).map(|i| c[[i, i]]).sum();
    let eig = SymmetricEigen::new(m);
    let clipped: f64 = eig.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| libm::sqrt(l.max(0.0))).collect();
    let fraction = if trace > 0.0 { clipped / trace } else { 0.0 };
    if fraction > CLIP_WARN_FRACTION {
        log::warn!("covariance not numerically PD: clipped {fraction:e} of the trace");
    }
    PsdFactor {
        factor: Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, j)] * roots[j]),
        clipped_fraction: fraction,
    }
}

/// `[cov_1d(h, z_i, z_j)]` over the given nodes.
pub fn cov_1d_matrix(h: f64, nodes: &[f64]) -> Array2<f64> {
    let n = nodes.len();
    Array2::from_shape_fn((n, n), |(i, j)| cov_1d_unchecked(h, nodes[i], nodes[j]))
}

/// Exact sampler of the fractional field on a grid.
///
/// The node covariance is the Kronecker product `C_t (x) C_x`, so with
/// `C_t = L_t L_t^T` and `C_x = L_x L_x^T` the matrix `L_t Z L_x^T` has the
/// exact covariance for i.i.d. standard normal `Z`. Factors are built on the
/// axis-excluded nodes (`t > 0`, `x > 0`) where the matrices are PD.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    hurst: HurstPair,
    grid: GridSpec,
    time: PsdFactor,
    space: PsdFactor,
}

impl FieldSampler {
    pub fn new(hurst: HurstPair, grid: GridSpec) -> Self {
        let tn: Vec<f64> = (1..=grid.n_t()).map(|i| grid.t(i)).collect();
        let xn: Vec<f64> = (1..=grid.n_x()).map(|j| grid.x(j)).collect();
        let time = factorize_psd(&cov_1d_matrix(hurst.h1(), &tn));
        let space = factorize_psd(&cov_1d_matrix(hurst.h2(), &xn));
        Self { hurst, grid, time, space }
    }

    pub fn hurst(&self) -> &HurstPair {
        &self.hurst
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn time_factor(&self) -> &PsdFactor {
        &self.time
    }

    pub fn space_factor(&self) -> &PsdFactor {
        &self.space
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        self.sample_stream(seed, 0)
    }

    /// Sample drawn from stream `stream` of the counter-based generator
    /// keyed by `seed`; `Z` is filled in row-major order.
    pub fn sample_stream(&self, seed: u64, stream: u64) -> FieldSample {
        let (nt, nx) = self.grid.cell_shape();
        let mut z = Array2::<f64>::zeros((nt, nx));
        let mut rng = NormalStream::new(seed, stream);
        rng.fill(z.as_slice_mut().expect("standard layout"));
        let lz = self.time.factor.dot(&z);
        let mut values = Array2::<f64>::zeros(self.grid.node_shape());
        ndarray::linalg::general_mat_mul(
            1.0,
            &lz,
            &self.space.factor.t(),
            0.0,
            &mut values.slice_mut(s![1.., 1..]),
        );
        FieldSample {
            values,
            hurst: self.hurst,
            grid: self.grid,
            seed,
        }
    }
}

pub fn sample_field(hurst: &HurstPair, grid: &GridSpec, seed: u64) -> FieldSample {
    FieldSampler::new(*hurst, *grid).sample(seed)
}
