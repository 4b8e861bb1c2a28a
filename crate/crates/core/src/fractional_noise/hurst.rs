use crate::error::{domain, Result};

/// Hurst pair `H = (h1, h2)` of a two-parameter fractional field: `h1` acts
/// in time, `h2` in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstPair {
    h1: f64,
    h2: f64,
    solver_admissible: bool,
}

impl HurstPair {
    /// Admissible pair for the solvers: `h1, h2 in (1/2, 1)` and `2 h1 + h2 > 2`.
    pub fn new(h1: f64, h2: f64) -> Result<Self> {
        check_open_unit_half(h1, "h1")?;
        check_open_unit_half(h2, "h2")?;
        if 2.0 * h1 + h2 <= 2.0 {
            return Err(domain!("2 h1 + h2 must exceed 2, got {}", 2.0 * h1 + h2));
        }
        Ok(Self { h1, h2, solver_admissible: true })
    }

    /// Pair usable for field sampling and covariance algebra only: each
    /// component in `(1/2, 1)`, no constraint on `2 h1 + h2`.
    pub fn sampling_only(h1: f64, h2: f64) -> Result<Self> {
        check_open_unit_half(h1, "h1")?;
        check_open_unit_half(h2, "h2")?;
        Ok(Self {
            h1,
            h2,
            solver_admissible: 2.0 * h1 + h2 > 2.0,
        })
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    pub fn is_solver_admissible(&self) -> bool {
        self.solver_admissible
    }

    /// `2 h1 + h2 - 1`, the growth exponent of the stochastic convolution's
    /// variance in `t`.
    pub fn growth_exponent(&self) -> f64 {
        2.0 * self.h1 + self.h2 - 1.0
    }

    pub fn require_solver_admissible(&self) -> Result<()> {
        if self.solver_admissible {
            Ok(())
        } else {
            Err(domain!(
                "Hurst pair ({}, {}) violates 2 h1 + h2 > 2 and cannot drive the solvers",
                self.h1,
                self.h2
            ))
        }
    }
}

fn check_open_unit_half(h: f64, name: &str) -> Result<()> {
    if h > 0.5 && h < 1.0 {
        Ok(())
    } else {
        Err(domain!("{name} must lie in (1/2, 1), got {h}"))
    }
}
