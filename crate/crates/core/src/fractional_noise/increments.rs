use core::ops::Add;

use ndarray::{s, Array2, Zip};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

use super::{FieldSample, HurstPair};

/// Rectangular increments of a field over grid cells:
/// `d2[[i, j]] = B(t_{i+1}, x_{j+1}) - B(t_i, x_{j+1}) - B(t_{i+1}, x_j) + B(t_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellIncrements {
    d2: Array2<f64>,
    grid: GridSpec,
    origin: Option<NoiseOrigin>,
}

/// Hurst pair and seed of the field the increments were taken from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseOrigin {
    pub hurst: HurstPair,
    pub seed: u64,
}

impl CellIncrements {
    pub fn from_array(grid: GridSpec, d2: Array2<f64>) -> Result<Self> {
        if d2.dim() != grid.cell_shape() {
            return Err(Error::Shape {
                expected: grid.cell_shape(),
                got: d2.dim(),
            });
        }
        Ok(Self {
            d2,
            grid,
            origin: None,
        })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            d2: Array2::zeros(grid.cell_shape()),
            grid,
            origin: None,
        }
    }

    pub fn origin(&self) -> Option<&NoiseOrigin> {
        self.origin.as_ref()
    }

    pub fn d2(&self) -> &Array2<f64> {
        &self.d2
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Row-and-column prefix sums: the node field vanishing on both axes
    /// whose increments are `self`.
    pub fn prefix_sum(&self) -> Array2<f64> {
        let (nt, nx) = self.grid.cell_shape();
        let mut v = Array2::<f64>::zeros(self.grid.node_shape());
        for i in 0..nt {
            for j in 0..nx {
                v[[i + 1, j + 1]] = self.d2[[i, j]] + v[[i, j + 1]] + v[[i + 1, j]] - v[[i, j]];
            }
        }
        v
    }
}

impl Add for &CellIncrements {
    type Output = CellIncrements;

    /// Panics on mismatched grids.
    fn add(self, rhs: &CellIncrements) -> CellIncrements {
        assert_eq!(self.grid, rhs.grid, "increments live on different grids");
        CellIncrements {
            d2: &self.d2 + &rhs.d2,
            grid: self.grid,
            origin: None,
        }
    }
}

pub fn cell_increments(field: &FieldSample) -> CellIncrements {
    let v = field.values();
    let d2 = &v.slice(s![1.., 1..]) - &v.slice(s![..-1, 1..]) - &v.slice(s![1.., ..-1])
        + &v.slice(s![..-1, ..-1]);
    CellIncrements {
        d2,
        grid: *field.grid(),
        origin: Some(NoiseOrigin {
            hurst: *field.hurst(),
            seed: field.seed(),
        }),
    }
}

/// Discrete Young integral `sum_{i,j} f(mid_ij) d2[[i, j]]` of a
/// deterministic integrand sampled at cell midpoints.
pub fn integrate_deterministic(f: &Array2<f64>, inc: &CellIncrements) -> Result<f64> {
    if f.dim() != inc.d2.dim() {
        return Err(Error::Shape {
            expected: inc.d2.dim(),
            got: f.dim(),
        });
    }
    let mut acc = 0.0;
    Zip::from(f).and(&inc.d2).for_each(|&a, &b| acc += a * b);
    Ok(acc)
}
