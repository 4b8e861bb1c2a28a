use alloc::vec::Vec;

use ndarray::linalg::general_mat_vec_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};

use crate::error::{config, Error, Result};
use crate::fractional_noise::{CellIncrements, NoiseOrigin};
use crate::grid::GridSpec;
use crate::heat_kernel::{initial_convolution, propagator_matrix, InitialData, KernelKind};

use super::convolution::{lag_convolve, ConvolutionKernel};
use super::drift::DriftSpec;
use super::field::{
    shifted_difference, sup_time_mean_square_distance, CompanionKind, Component, SolutionField,
    SolutionMeta,
};
use super::{SolveMode, SolverConfig};

/// Iterate the Picard map starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardStart {
    /// `u(t, x) = int_D p(t, x, y) u0(y) dy`.
    HeatFlow,
    /// `u = 0`.
    Zero,
}

/// Successive sup-norm distances `max_{t,x} |u_{k+1} - u_k|` of the Picard
/// iterates.
pub type IterationTrace = Vec<f64>;

#[derive(Debug, Clone)]
struct GradientOperators {
    step: Array2<f64>,
    half: Array2<f64>,
    noise: ConvolutionKernel,
}

/// Precomputed kernel matrices for one grid, reusable across noise samples,
/// drifts and shifts.
///
/// * `p_step[j, k] = w_k p(dt, x_j, x_k)` propagates one step.
/// * `p_half` is the same at `dt / 2`, used for the drift over the step.
/// * The noise tables give the stochastic convolution.
#[derive(Debug, Clone)]
pub struct MildOperators {
    grid: GridSpec,
    p_step: Array2<f64>,
    p_half: Array2<f64>,
    noise: ConvolutionKernel,
    gradient: Option<GradientOperators>,
    picard_lags: Option<Vec<Array2<f64>>>,
}

/// Noise responses computed once per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedNoise {
    grid: GridSpec,
    z: Array2<f64>,
    zv: Option<Array2<f64>>,
    origin: Option<NoiseOrigin>,
}

impl PreparedNoise {
    /// Stochastic convolution with `p`.
    pub fn convolution(&self) -> &Array2<f64> {
        &self.z
    }

    /// Stochastic convolution with `dp/dx`, when gradient operators were built.
    pub fn gradient_convolution(&self) -> Option<&Array2<f64>> {
        self.zv.as_ref()
    }

    pub fn origin(&self) -> Option<&NoiseOrigin> {
        self.origin.as_ref()
    }
}

#[derive(Debug, Clone)]
pub struct ThetaSweepResult {
    /// Snapped shifts in descending order.
    pub thetas: Vec<f64>,
    pub solutions: Vec<SolutionField>,
    /// `sup_t sup_x |c_a - c_b|^2` between companions of the single sample.
    pub pairwise_d2: Array2<f64>,
}

fn check_finite(row: ArrayView1<f64>, t_index: usize) -> Result<()> {
    match row.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(j) => Err(Error::BlowUp {
            t_index,
            x_index: j,
            value: row[j],
        }),
    }
}

fn eval_drift(g: &DriftSpec, u: ArrayView1<f64>, c: ArrayView1<f64>, mut out: ArrayViewMut1<f64>) {
    for ((o, &a), &b) in out.iter_mut().zip(u).zip(c) {
        *o = g.eval(a, b);
    }
}

impl MildOperators {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        Ok(Self {
            grid: *grid,
            p_step: propagator_matrix(KernelKind::P, grid.dt(), grid)?,
            p_half: propagator_matrix(KernelKind::P, 0.5 * grid.dt(), grid)?,
            noise: ConvolutionKernel::new(KernelKind::P, grid),
            gradient: None,
            picard_lags: None,
        })
    }

    /// Adds the `dp/dx` matrices needed by [`solve_coupled`].
    pub fn with_gradient(mut self) -> Result<Self> {
        if self.gradient.is_none() {
            let g = &self.grid;
            self.gradient = Some(GradientOperators {
                step: propagator_matrix(KernelKind::Dx, g.dt(), g)?,
                half: propagator_matrix(KernelKind::Dx, 0.5 * g.dt(), g)?,
                noise: ConvolutionKernel::new(KernelKind::Dx, g),
            });
        }
        Ok(self)
    }

    /// Adds the lag matrices `w_k p((m - 1/2) dt, x_j, x_k)` of the
    /// space-time Picard map.
    pub fn with_picard(mut self) -> Result<Self> {
        if self.picard_lags.is_none() {
            let g = &self.grid;
            let lags = (1..=g.n_t())
                .map(|m| propagator_matrix(KernelKind::P, (m as f64 - 0.5) * g.dt(), g))
                .collect::<Result<Vec<_>>>()?;
            self.picard_lags = Some(lags);
        }
        Ok(self)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn prepare(&self, noise: &CellIncrements) -> Result<PreparedNoise> {
        let z = self.noise.apply(noise)?;
        let zv = match &self.gradient {
            Some(gr) => Some(gr.noise.apply(noise)?),
            None => None,
        };
        Ok(PreparedNoise {
            grid: self.grid,
            z,
            zv,
            origin: noise.origin().copied(),
        })
    }

    fn check_inputs(&self, cfg: &SolverConfig, noise: &PreparedNoise, u0: &InitialData) -> Result<()> {
        if cfg.grid() != &self.grid || noise.grid != self.grid {
            return Err(config!("solver, configuration and noise must share one grid"));
        }
        if u0.len() != self.grid.n_x() + 1 {
            return Err(Error::Shape {
                expected: (self.grid.n_x() + 1, 1),
                got: (u0.len(), 1),
            });
        }
        Ok(())
    }

    fn meta(&self, cfg: &SolverConfig, noise: &PreparedNoise, theta: Option<f64>) -> SolutionMeta {
        SolutionMeta {
            noise: noise.origin,
            config_digest: cfg.digest(),
            theta,
        }
    }

    /// Explicit mild time stepping of the nonlocal equation. Writing
    /// `w = u - Z`,
    ///
    /// ```text
    /// w_{n+1} = P_dt w_n + dt P_{dt/2} g(u_n, u^theta_n),   u_{n+1} = w_{n+1} + Z_{n+1}.
    /// ```
    pub fn solve_nonlocal(
        &self,
        cfg: &SolverConfig,
        noise: &PreparedNoise,
        u0: &InitialData,
        g: &DriftSpec,
    ) -> Result<SolutionField> {
        if cfg.mode() != SolveMode::TimeStepping {
            return Err(config!("solve_nonlocal needs mode TimeStepping"));
        }
        self.check_inputs(cfg, noise, u0)?;
        let grid = &self.grid;
        let (nt, nx) = (grid.n_t(), grid.n_x());
        let (m, theta, dt) = (cfg.shift_cells(), cfg.theta(), grid.dt());

        let mut u = Array2::zeros(grid.node_shape());
        let mut c = Array2::zeros(grid.node_shape());
        u.row_mut(0).assign(&ArrayView1::from(u0.samples()));
        let mut w = Array1::from(u0.samples().to_vec());
        let mut w_next = Array1::zeros(nx + 1);
        let mut drift = Array1::zeros(nx + 1);
        for n in 0..nt {
            shifted_difference(u.row(n), m, theta, c.row_mut(n));
            eval_drift(g, u.row(n), c.row(n), drift.view_mut());
            general_mat_vec_mul(1.0, &self.p_step, &w, 0.0, &mut w_next);
            general_mat_vec_mul(dt, &self.p_half, &drift, 1.0, &mut w_next);
            let mut row = u.row_mut(n + 1);
            row.assign(&w_next);
            row += &noise.z.row(n + 1);
            row[0] = 0.0;
            check_finite(u.row(n + 1), n + 1)?;
            core::mem::swap(&mut w, &mut w_next);
        }
        shifted_difference(u.row(nt), m, theta, c.row_mut(nt));
        let meta = self.meta(cfg, noise, Some(theta));
        Ok(SolutionField::new(u, c, CompanionKind::ThetaDifference, *grid, (nx + 1 - m).min(grid.physical_columns()), meta))
    }

    /// Rows `int_D p(t_n, x, y) u0(y) dy`.
    fn heat_flow(&self, u0: &InitialData) -> Result<Array2<f64>> {
        let grid = &self.grid;
        let mut out = Array2::zeros(grid.node_shape());
        for n in 0..=grid.n_t() {
            let row = initial_convolution(u0, grid.t(n), grid)?;
            out.row_mut(n).assign(&ArrayView1::from(&row[..]));
        }
        Ok(out)
    }

    fn picard_map(
        &self,
        base: &Array2<f64>,
        iterate: &Array2<f64>,
        m: usize,
        theta: f64,
        g: &DriftSpec,
        lags: &[Array2<f64>],
    ) -> Array2<f64> {
        let nt = self.grid.n_t();
        let mut c = Array1::zeros(self.grid.n_x() + 1);
        let mut drift = Array2::zeros((nt, self.grid.n_x() + 1));
        for n in 0..nt {
            shifted_difference(iterate.row(n), m, theta, c.view_mut());
            eval_drift(g, iterate.row(n), c.view(), drift.row_mut(n));
        }
        let mut out = base.clone();
        lag_convolve(lags, drift.view(), self.grid.dt(), out.view_mut());
        out.column_mut(0).fill(0.0);
        out
    }

    /// Fixed-point iteration of the full space-time mild map
    /// `u -> p*u0 + p*g(u, u^theta) + Z` until the sup-norm step falls
    /// below `picard_tol`.
    pub fn picard_solve(
        &self,
        cfg: &SolverConfig,
        noise: &PreparedNoise,
        u0: &InitialData,
        g: &DriftSpec,
        start: PicardStart,
    ) -> Result<(SolutionField, IterationTrace)> {
        if cfg.mode() != SolveMode::Picard {
            return Err(config!("picard_solve needs mode Picard"));
        }
        self.check_inputs(cfg, noise, u0)?;
        let lags = self
            .picard_lags
            .as_ref()
            .ok_or_else(|| config!("Picard operators were not built; call with_picard"))?;
        let (m, theta) = (cfg.shift_cells(), cfg.theta());
        let heat = self.heat_flow(u0)?;
        let base = &heat + &noise.z;
        let mut cur = match start {
            PicardStart::HeatFlow => heat,
            PicardStart::Zero => Array2::zeros(self.grid.node_shape()),
        };
        let mut trace = Vec::new();
        for _ in 0..cfg.picard_max_iters() {
            let next = self.picard_map(&base, &cur, m, theta, g, lags);
            for (n, row) in next.rows().into_iter().enumerate() {
                check_finite(row, n)?;
            }
            let d = next
                .iter()
                .zip(&cur)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            trace.push(d);
            cur = next;
            if d < cfg.picard_tol() {
                let mut c = Array2::zeros(self.grid.node_shape());
                for n in 0..=self.grid.n_t() {
                    shifted_difference(cur.row(n), m, theta, c.row_mut(n));
                }
                let nx = self.grid.n_x();
                let meta = self.meta(cfg, noise, Some(theta));
                let field = SolutionField::new(
                    cur,
                    c,
                    CompanionKind::ThetaDifference,
                    self.grid,
                    (nx + 1 - m).min(self.grid.physical_columns()),
                    meta,
                );
                return Ok((field, trace));
            }
        }
        Err(Error::NonConvergence { trace })
    }

    /// Time stepping of the coupled system, with `v` driven by `dp/dx`
    /// in every term:
    ///
    /// ```text
    /// v_{n+1} = D_dt w_n + dt D_{dt/2} g(u_n, v_n) + Zv_{n+1}.
    /// ```
    pub fn solve_coupled(
        &self,
        cfg: &SolverConfig,
        noise: &PreparedNoise,
        u0: &InitialData,
        g: &DriftSpec,
    ) -> Result<SolutionField> {
        self.check_inputs(cfg, noise, u0)?;
        let gr = self
            .gradient
            .as_ref()
            .ok_or_else(|| config!("gradient operators were not built; call with_gradient"))?;
        let zv = noise
            .zv
            .as_ref()
            .ok_or_else(|| config!("noise was prepared without gradient operators"))?;
        let grid = &self.grid;
        let (nt, nx, dt) = (grid.n_t(), grid.n_x(), grid.dt());

        let mut u = Array2::zeros(grid.node_shape());
        let mut v = Array2::zeros(grid.node_shape());
        u.row_mut(0).assign(&ArrayView1::from(u0.samples()));
        v.row_mut(0).assign(&ArrayView1::from(u0.derivative_samples()));
        let mut w = Array1::from(u0.samples().to_vec());
        let mut w_next = Array1::zeros(nx + 1);
        let mut drift = Array1::zeros(nx + 1);
        for n in 0..nt {
            eval_drift(g, u.row(n), v.row(n), drift.view_mut());
            {
                let mut vrow = v.row_mut(n + 1);
                general_mat_vec_mul(1.0, &gr.step, &w, 0.0, &mut vrow);
                general_mat_vec_mul(dt, &gr.half, &drift, 1.0, &mut vrow);
                vrow += &zv.row(n + 1);
            }
            general_mat_vec_mul(1.0, &self.p_step, &w, 0.0, &mut w_next);
            general_mat_vec_mul(dt, &self.p_half, &drift, 1.0, &mut w_next);
            let mut row = u.row_mut(n + 1);
            row.assign(&w_next);
            row += &noise.z.row(n + 1);
            row[0] = 0.0;
            check_finite(u.row(n + 1), n + 1)?;
            check_finite(v.row(n + 1), n + 1)?;
            core::mem::swap(&mut w, &mut w_next);
        }
        let meta = self.meta(cfg, noise, None);
        Ok(SolutionField::new(u, v, CompanionKind::Gradient, *grid, grid.physical_columns(), meta))
    }

    /// Runs [`MildOperators::solve_nonlocal`] once per shift on one shared
    /// noise sample.
    pub fn theta_sweep(
        &self,
        base: &SolverConfig,
        thetas: &[f64],
        noise: &PreparedNoise,
        u0: &InitialData,
        g: &DriftSpec,
    ) -> Result<ThetaSweepResult> {
        if thetas.len() < 2 {
            return Err(config!("a theta sweep needs at least two values, got {}", thetas.len()));
        }
        let mut cfgs = thetas
            .iter()
            .map(|&t| base.with_theta(t))
            .collect::<Result<Vec<_>>>()?;
        cfgs.sort_by(|a, b| b.shift_cells().cmp(&a.shift_cells()));
        let solutions = cfgs
            .iter()
            .map(|c| self.solve_nonlocal(c, noise, u0, g))
            .collect::<Result<Vec<_>>>()?;
        let k = solutions.len();
        let mut d2 = Array2::zeros((k, k));
        for a in 0..k {
            for b in (a + 1)..k {
                let d = sup_time_mean_square_distance(
                    core::slice::from_ref(&solutions[a]),
                    core::slice::from_ref(&solutions[b]),
                    Component::Companion,
                )?;
                d2[[a, b]] = d;
                d2[[b, a]] = d;
            }
        }
        Ok(ThetaSweepResult {
            thetas: cfgs.iter().map(|c| c.theta()).collect(),
            solutions,
            pairwise_d2: d2,
        })
    }
}

/// See [`MildOperators::solve_nonlocal`].
pub fn solve_nonlocal(
    cfg: &SolverConfig,
    noise: &CellIncrements,
    u0: &InitialData,
    g: &DriftSpec,
) -> Result<SolutionField> {
    let ops = MildOperators::new(cfg.grid())?;
    let prepared = ops.prepare(noise)?;
    ops.solve_nonlocal(cfg, &prepared, u0, g)
}

/// See [`MildOperators::picard_solve`]; starts from the heat flow of `u0`.
pub fn picard_solve(
    cfg: &SolverConfig,
    noise: &CellIncrements,
    u0: &InitialData,
    g: &DriftSpec,
) -> Result<(SolutionField, IterationTrace)> {
    let ops = MildOperators::new(cfg.grid())?.with_picard()?;
    let prepared = ops.prepare(noise)?;
    ops.picard_solve(cfg, &prepared, u0, g, PicardStart::HeatFlow)
}

/// See [`MildOperators::solve_coupled`].
pub fn solve_coupled(
    cfg: &SolverConfig,
    noise: &CellIncrements,
    u0: &InitialData,
    g: &DriftSpec,
) -> Result<SolutionField> {
    let ops = MildOperators::new(cfg.grid())?.with_gradient()?;
    let prepared = ops.prepare(noise)?;
    ops.solve_coupled(cfg, &prepared, u0, g)
}

/// See [`MildOperators::theta_sweep`].
pub fn theta_sweep(
    base: &SolverConfig,
    thetas: &[f64],
    noise: &CellIncrements,
    u0: &InitialData,
    g: &DriftSpec,
) -> Result<ThetaSweepResult> {
    let ops = MildOperators::new(base.grid())?;
    let prepared = ops.prepare(noise)?;
    ops.theta_sweep(base, thetas, &prepared, u0, g)
}
