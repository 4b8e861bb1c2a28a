use core::hash::Hasher;

use crate::error::{config, Result};
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveMode {
    TimeStepping,
    Picard,
}

/// Numerical settings shared by the mild-form solvers.
///
/// `theta` is snapped to `m * dx` with `m = round(theta / dx)`; `m` must be
/// at least one and leave room for the shift inside the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    grid: GridSpec,
    theta: f64,
    shift_cells: usize,
    picard_tol: f64,
    picard_max_iters: usize,
    mode: SolveMode,
}

impl SolverConfig {
    pub fn new(
        grid: GridSpec,
        theta: f64,
        picard_tol: f64,
        picard_max_iters: usize,
        mode: SolveMode,
    ) -> Result<Self> {
        let shift_cells = snap_theta(&grid, theta)?;
        if !(picard_tol.is_finite() && picard_tol > 0.0) {
            return Err(config!("picard_tol must be positive, got {picard_tol}"));
        }
        if picard_max_iters == 0 {
            return Err(config!("picard_max_iters must be at least 1"));
        }
        Ok(Self {
            grid,
            theta,
            shift_cells,
            picard_tol,
            picard_max_iters,
            mode,
        })
    }

    /// Time stepping with `theta = dx` and default Picard settings.
    pub fn time_stepping(grid: GridSpec) -> Self {
        Self::new(grid, grid.dx(), 1e-8, 200, SolveMode::TimeStepping).unwrap()
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.grid, theta, self.picard_tol, self.picard_max_iters, self.mode)
    }

    pub fn with_mode(&self, mode: SolveMode) -> Self {
        Self { mode, ..*self }
    }

    pub fn with_picard(&self, tol: f64, max_iters: usize) -> Result<Self> {
        Self::new(self.grid, self.theta, tol, max_iters, self.mode)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The value that was requested, before snapping.
    pub fn theta_requested(&self) -> f64 {
        self.theta
    }

    /// `m * dx`.
    pub fn theta(&self) -> f64 {
        self.shift_cells as f64 * self.grid.dx()
    }

    pub fn shift_cells(&self) -> usize {
        self.shift_cells
    }

    pub fn picard_tol(&self) -> f64 {
        self.picard_tol
    }

    pub fn picard_max_iters(&self) -> usize {
        self.picard_max_iters
    }

    pub fn mode(&self) -> SolveMode {
        self.mode
    }

    /// FNV-1a digest of every numerical setting (with the snapped `theta`).
    pub fn digest(&self) -> u64 {
        let mut h = fnv::FnvHasher::default();
        let g = &self.grid;
        for v in [g.horizon(), g.length(), self.theta(), self.picard_tol] {
            h.write_u64(v.to_bits());
        }
        for v in [g.n_t(), g.n_x(), self.picard_max_iters] {
            h.write_u64(v as u64);
        }
        h.write_u8(match self.mode {
            SolveMode::TimeStepping => 0,
            SolveMode::Picard => 1,
        });
        h.finish()
    }
}

/// Number of cells `theta` covers after rounding to the grid.
pub fn snap_theta(grid: &GridSpec, theta: f64) -> Result<usize> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(config!("theta must be positive and finite, got {theta}"));
    }
    let m = libm::round(theta / grid.dx());
    if m < 1.0 {
        return Err(config!(
            "theta={theta} is below half a cell (dx={}) and cannot be represented as a grid shift",
            grid.dx()
        ));
    }
    if m >= grid.n_x() as f64 {
        return Err(config!(
            "theta={theta} spans {m} cells but the grid has only {}",
            grid.n_x()
        ));
    }
    Ok(m as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(1.0, 4.0, 8, 40).unwrap()
    }

    #[test]
    fn theta_snaps_to_cells() {
        let c = SolverConfig::new(grid(), 0.33, 1e-6, 10, SolveMode::TimeStepping).unwrap();
        assert_eq!(c.shift_cells(), 3);
        assert!((c.theta() - 0.3).abs() < 1e-15);
        assert_eq!(c.theta_requested(), 0.33);
        assert_eq!(snap_theta(&grid(), 0.06).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_theta_and_tolerances() {
        let g = grid();
        assert!(SolverConfig::new(g, 0.0, 1e-6, 10, SolveMode::Picard).is_err());
        assert!(SolverConfig::new(g, -0.2, 1e-6, 10, SolveMode::Picard).is_err());
        assert!(SolverConfig::new(g, 0.04, 1e-6, 10, SolveMode::Picard).is_err());
        assert!(SolverConfig::new(g, 10.0, 1e-6, 10, SolveMode::Picard).is_err());
        assert!(SolverConfig::new(g, 0.1, 0.0, 10, SolveMode::Picard).is_err());
        assert!(SolverConfig::new(g, 0.1, 1e-6, 0, SolveMode::Picard).is_err());
    }

    #[test]
    fn digest_tracks_settings() {
        let a = SolverConfig::time_stepping(grid());
        assert_eq!(a.digest(), SolverConfig::time_stepping(grid()).digest());
        assert_ne!(a.digest(), a.with_theta(0.2).unwrap().digest());
        assert_ne!(a.digest(), a.with_mode(SolveMode::Picard).digest());
        // snapping makes nearby requests equivalent
        assert_eq!(a.with_theta(0.21).unwrap().digest(), a.with_theta(0.2).unwrap().digest());
    }
}
