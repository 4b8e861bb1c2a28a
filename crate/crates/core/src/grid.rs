use crate::error::{domain, Result};

/// Uniform space-time lattice on `[0, T] x [0, L]`.
///
/// Nodes are `t_i = i * dt` for `i in 0..=n_t` and `x_j = j * dx` for
/// `j in 0..=n_x`. Cell `(i, j)` is `[t_i, t_{i+1}] x [x_j, x_{j+1}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    horizon: f64,
    length: f64,
    n_t: usize,
    n_x: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, length: f64, n_t: usize, n_x: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(domain!("time horizon must be positive and finite, got {horizon}"));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(domain!("space truncation must be positive and finite, got {length}"));
        }
        if n_t < 2 || n_x < 2 {
            return Err(domain!("grid needs at least 2 steps per axis, got n_t={n_t}, n_x={n_x}"));
        }
        Ok(Self { horizon, length, n_t, n_x })
    }

    /// Smallest truncation length that keeps the Gaussian tail of the heat
    /// kernel below ~1e-8 for points up to `x_max` and times up to `horizon`.
    pub fn truncation_length(x_max: f64, horizon: f64) -> f64 {
        x_max + 6.0 * libm::sqrt(horizon)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_t as f64
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_x as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn t_mid(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dt()
    }

    pub fn x_mid(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx()
    }

    /// Shape of node-valued fields: `(n_t + 1, n_x + 1)`.
    pub fn node_shape(&self) -> (usize, usize) {
        (self.n_t + 1, self.n_x + 1)
    }

    /// Shape of cell-valued fields: `(n_t, n_x)`.
    pub fn cell_shape(&self) -> (usize, usize) {
        (self.n_t, self.n_x)
    }

    /// Number of leading space nodes with `x <= L - 6 sqrt(T)`, outside the
    /// band where cutting the domain at `L` is felt. At least one.
    pub fn physical_columns(&self) -> usize {
        let x_max = self.length - 6.0 * libm::sqrt(self.horizon);
        let j = libm::floor(x_max / self.dx() + 1e-9);
        if j < 0.0 {
            1
        } else {
            (j as usize + 1).min(self.n_x + 1)
        }
    }

    /// Composite trapezoid weights on the space nodes.
    pub fn trapezoid_weights(&self) -> alloc::vec::Vec<f64> {
        let dx = self.dx();
        (0..=self.n_x)
            .map(|j| if j == 0 || j == self.n_x { 0.5 * dx } else { dx })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn physical_band() {
        let g = GridSpec::new(1.0, 10.0, 4, 20).unwrap();
        assert_eq!(g.physical_columns(), 9);
        assert_eq!(GridSpec::new(1.0, 3.0, 4, 20).unwrap().physical_columns(), 1);
        let x_max = 2.5;
        let g = GridSpec::new(1.0, GridSpec::truncation_length(x_max, 1.0), 4, 17).unwrap();
        assert!(g.x(g.physical_columns() - 1) <= x_max + 1e-12);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(1.0, 1.0, 1, 8).is_err());
        assert!(GridSpec::new(1.0, 1.0, 8, 1).is_err());
        assert!(GridSpec::new(0.0, 1.0, 8, 8).is_err());
        assert!(GridSpec::new(1.0, f64::NAN, 8, 8).is_err());
    }

    #[test]
    fn node_coordinates() {
        let g = GridSpec::new(2.0, 4.0, 4, 8).unwrap();
        assert_eq!(g.dt(), 0.5);
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.t(4), 2.0);
        assert_eq!(g.x_mid(0), 0.25);
        let w: f64 = g.trapezoid_weights().iter().sum();
        assert!((w - 4.0).abs() < 1e-15);
    }
}
