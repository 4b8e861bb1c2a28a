//! Computations behind each command, returning typed results; the command
//! layer only formats them.

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use fracspde_core::analysis::{
    empirical_covariance, ensemble_theta_distances, fit_window_lags, holder_exponent, node_subset,
    structure_function, theta_rate_fit, variance_growth_slope, variance_profile, Axis, CovarianceReport,
    HolderFit, NodeWindow, SlopeFit, StructureFunction, ThetaDistances, ThetaRateFit, VarianceProfile,
    MIN_SAMPLES,
};
use fracspde_core::fractional_noise::{
    cell_increments, covariance, FieldSample, FieldSampler, HurstPair, KhKernel,
};
use fracspde_core::heat_kernel::{
    bound_ratio, bound_ratio_lock, p_derivative_scaled, p_eval, semigroup_composition, KernelKind,
};
use fracspde_core::rng::NormalStream;
use fracspde_core::spde_solver::{
    sup_time_mean_square_distance, Component, ConvolutionKernel, IterationTrace, MildOperators,
    PicardStart, SolutionField, SolveMode,
};
use fracspde_core::GridSpec;

use crate::config::RunConfig;
use crate::ensemble::Ensemble;
use crate::error::{Result, RunError};

fn ensemble(cfg: &RunConfig) -> Result<Ensemble> {
    Ensemble::new(cfg.seed, cfg.ensemble_size)
}

fn need_samples(cfg: &RunConfig, min: usize, what: &str) -> Result<()> {
    if cfg.ensemble_size < min {
        return Err(RunError::Config(format!(
            "{what} needs ensemble_size >= {min}, got {}",
            cfg.ensemble_size
        )));
    }
    Ok(())
}

/// `c_H` calibrated on `[0, T] x [0, L]`; `None` when `2 h1 + h2 <= 2`.
pub fn calibrated_c_h(cfg: &RunConfig) -> Result<Option<f64>> {
    match cfg.solver_hurst() {
        Ok(h) => Ok(Some(KhKernel::calibrate(h, cfg.horizon, cfg.length)?.c_h())),
        Err(_) => Ok(None),
    }
}

pub fn sample_fields(cfg: &RunConfig) -> Result<Vec<FieldSample>> {
    let sampler = FieldSampler::new(cfg.sampling_hurst()?, cfg.grid()?);
    ensemble(cfg)?.map(|_, s| Ok(sampler.sample(s)))
}

/// Solutions of the nonlocal equation (or of the coupled system) per member,
/// plus the Picard trace of member 0 in Picard mode.
pub struct SolveStudy {
    pub fields: Vec<SolutionField>,
    pub trace: Option<IterationTrace>,
}

pub fn solve(cfg: &RunConfig, coupled: bool) -> Result<SolveStudy> {
    let hurst = cfg.solver_hurst()?;
    let grid = cfg.grid()?;
    let solver = cfg.solver_config()?;
    if coupled && solver.mode() == SolveMode::Picard {
        return Err(RunError::Config("solve-coupled supports mode = time_stepping only".into()));
    }
    let (u0, g) = (cfg.initial_data()?, cfg.drift()?);
    let mut ops = MildOperators::new(&grid)?;
    if coupled {
        ops = ops.with_gradient()?;
    }
    if solver.mode() == SolveMode::Picard {
        ops = ops.with_picard()?;
    }
    let sampler = FieldSampler::new(hurst, grid);
    let out = ensemble(cfg)?.map(|_, s| {
        let noise = ops.prepare(&cell_increments(&sampler.sample(s)))?;
        Ok(if coupled {
            (ops.solve_coupled(&solver, &noise, &u0, &g)?, None)
        } else if solver.mode() == SolveMode::Picard {
            let (f, t) = ops.picard_solve(&solver, &noise, &u0, &g, PicardStart::HeatFlow)?;
            (f, Some(t))
        } else {
            (ops.solve_nonlocal(&solver, &noise, &u0, &g)?, None)
        })
    })?;
    let mut trace = None;
    let fields = out
        .into_iter()
        .enumerate()
        .map(|(k, (f, t))| {
            if k == 0 {
                trace = t;
            }
            f
        })
        .collect();
    Ok(SolveStudy { fields, trace })
}

/// Companion distances across the sweep shifts and against the coupled
/// gradient, on common noise per member.
pub struct ThetaStudy {
    pub distances: ThetaDistances,
    /// `(theta, sup_t sup_x E |v - c_theta|^2)`.
    pub to_gradient: Vec<(f64, f64)>,
    /// `None` when fewer than two distinct shifts were swept.
    pub rate: Option<ThetaRateFit>,
}

pub fn theta_sweep(cfg: &RunConfig) -> Result<ThetaStudy> {
    let hurst = cfg.solver_hurst()?;
    let grid = cfg.grid()?;
    let base = cfg.solver_config()?.with_mode(SolveMode::TimeStepping);
    let thetas = cfg.thetas()?;
    let (u0, g) = (cfg.initial_data()?, cfg.drift()?);
    let ops = MildOperators::new(&grid)?.with_gradient()?;
    let sampler = FieldSampler::new(hurst, grid);
    let runs = ensemble(cfg)?.map(|_, s| {
        let noise = ops.prepare(&cell_increments(&sampler.sample(s)))?;
        let sweep = ops.theta_sweep(&base, &thetas, &noise, &u0, &g)?;
        let v = ops.solve_coupled(&base, &noise, &u0, &g)?;
        Ok((sweep, v))
    })?;
    let (sweeps, vs): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let distances = ensemble_theta_distances(&sweeps)?;
    let mut to_gradient = Vec::new();
    for (i, &theta) in distances.thetas.iter().enumerate() {
        let comp: Vec<SolutionField> = sweeps.iter().map(|s| s.solutions[i].clone()).collect();
        to_gradient.push((theta, sup_time_mean_square_distance(&vs, &comp, Component::Companion)?));
    }
    let rate = match theta_rate_fit(&distances) {
        Ok(r) => Some(r),
        Err(fracspde_core::Error::Degenerate(m)) => {
            log::warn!("theta rate not fitted: {m}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    Ok(ThetaStudy {
        distances,
        to_gradient,
        rate,
    })
}

pub fn covariance_check(cfg: &RunConfig) -> Result<CovarianceReport> {
    need_samples(cfg, MIN_SAMPLES, "validate-covariance")?;
    cfg.check_subset()?;
    let grid = cfg.grid()?;
    let hurst = cfg.sampling_hurst()?;
    let fields = sample_fields(cfg)?;
    let nodes = node_subset(&grid, cfg.subset_rows, cfg.subset_cols);
    let views: Vec<ArrayView2<f64>> = fields.iter().map(|f| f.values().view()).collect();
    Ok(empirical_covariance(&views, &nodes, &hurst, &grid)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelBound {
    pub kind: &'static str,
    pub samples: usize,
    pub sup_ratio: f64,
    pub lock: f64,
    pub pass: bool,
}

/// Sup of `bound_ratio` over `n` uniform points of `(0, T] x [0, L]^2` per
/// kind. Stream `k` of `seed` drives kind `k`.
pub fn kernel_bounds(n: usize, seed: u64, horizon: f64, length: f64) -> Result<Vec<KernelBound>> {
    KernelKind::ALL
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let mut rng = NormalStream::new(seed, k as u64);
            let mut sup = 0.0f64;
            for _ in 0..n {
                let t = horizon * (1.0 - rng.next_uniform());
                let x = length * rng.next_uniform();
                let y = length * rng.next_uniform();
                let r = bound_ratio(kind, t, x, y)?;
                sup = if r.is_nan() { f64::NAN } else { sup.max(r) };
            }
            let lock = bound_ratio_lock(kind);
            Ok(KernelBound {
                kind: kind.name(),
                samples: n,
                sup_ratio: sup,
                lock,
                pass: sup.is_finite() && sup <= lock,
            })
        })
        .collect()
}

/// Largest `|dp/dt - (1/2) d2p/dx2| / max(|dp/dt|, |(1/2) d2p/dx2|)` over
/// `n` uniform points; exact zeros of both sides count as 0. Both sides are
/// evaluated with the same Gaussian factor divided out, which leaves the
/// ratio unchanged but keeps small-`t`, far-off-diagonal points out of the
/// subnormal range.
pub fn heat_equation_residual(n: usize, seed: u64, horizon: f64, length: f64) -> Result<f64> {
    let mut rng = NormalStream::new(seed, 16);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let t = horizon * (1.0 - rng.next_uniform());
        let x = length * rng.next_uniform();
        let y = length * rng.next_uniform();
        let dt = p_derivative_scaled(KernelKind::Dt, t, x, y)?;
        let half_dxx = 0.5 * p_derivative_scaled(KernelKind::Dxx, t, x, y)?;
        let scale = dt.abs().max(half_dxx.abs());
        if scale > 0.0 {
            worst = worst.max((dt - half_dxx).abs() / scale);
        }
    }
    Ok(worst)
}

/// Largest `|int p(s,x,z) p(t-s,z,y) dz - p(t,x,y)|` over `n` random
/// interior points, with the integral by the trapezoid rule on the grid's
/// space nodes. Times lie in `[T/10, T]`, split at `s / t in [0.2, 0.8]`;
/// `x, y` lie in `[0, L/2]`, away from the truncation edge.
pub fn semigroup_error(n: usize, seed: u64, grid: &GridSpec) -> Result<f64> {
    let mut rng = NormalStream::new(seed, 17);
    let (horizon, length) = (grid.horizon(), grid.length());
    let mut worst = 0.0f64;
    for _ in 0..n {
        let t = horizon * (0.1 + 0.9 * rng.next_uniform());
        let s = t * (0.2 + 0.6 * rng.next_uniform());
        let x = 0.5 * length * rng.next_uniform();
        let y = 0.5 * length * rng.next_uniform();
        let q = semigroup_composition(s, t, x, y, grid)?;
        worst = worst.max((q - p_eval(t, x, y)?).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsometryPair {
    pub t_a: f64,
    pub x_a: f64,
    pub t_b: f64,
    pub x_b: f64,
    pub gram: f64,
    pub covariance: f64,
    pub rel_error: f64,
}

/// Held-out rectangles `[0,t] x [0,x]` as fractions of `(T, L)`.
pub const ISOMETRY_PAIRS: [((f64, f64), (f64, f64)); 6] = [
    ((0.25, 0.5), (0.5, 0.25)),
    ((0.5, 0.5), (0.5, 0.5)),
    ((1.0, 0.3), (0.2, 1.0)),
    ((0.7, 0.9), (0.4, 0.6)),
    ((0.1, 0.1), (0.9, 0.8)),
    ((0.35, 1.0), (1.0, 0.65)),
];

/// Calibrates `c_H` on `[0,T] x [0,L]`, then compares
/// `<K_H^* 1_A, K_H^* 1_B>` with `R` on [`ISOMETRY_PAIRS`].
pub fn isometry_check(hurst: HurstPair, horizon: f64, length: f64) -> Result<(f64, Vec<IsometryPair>)> {
    let k = KhKernel::calibrate(hurst, horizon, length)?;
    let rows = ISOMETRY_PAIRS
        .iter()
        .map(|&((ta, xa), (tb, xb))| {
            let (t_a, x_a, t_b, x_b) = (ta * horizon, xa * length, tb * horizon, xb * length);
            let gram = k.gram(t_a, t_b, x_a, x_b);
            let r = covariance(&hurst, t_a, t_b, x_a, x_b)?;
            Ok(IsometryPair {
                t_a,
                x_a,
                t_b,
                x_b,
                gram,
                covariance: r,
                rel_error: (gram - r).abs() / r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((k.c_h(), rows))
}

/// Structure functions and Hölder fits of one field family along one axis.
#[derive(Debug, Clone)]
pub struct HolderRow {
    pub field: &'static str,
    pub axis: Axis,
    pub structure: StructureFunction,
    pub fit: HolderFit,
}

/// Node window of the Hölder fits: times from `T/4` on, columns inside the
/// truncation-free band (and clear of padded shifts).
pub fn holder_window(grid: &GridSpec, valid_columns: usize) -> NodeWindow {
    NodeWindow::new(grid.n_t() / 4..grid.n_t() + 1, 1..valid_columns)
}

/// Spatial and temporal Hölder fits of `u` (nonlocal solver) and of the
/// coupled gradient `v`.
pub fn holder_study(cfg: &RunConfig) -> Result<Vec<HolderRow>> {
    let hurst = cfg.solver_hurst()?;
    let grid = cfg.grid()?;
    let solver = cfg.solver_config()?.with_mode(SolveMode::TimeStepping);
    let (u0, g) = (cfg.initial_data()?, cfg.drift()?);
    let ops = MildOperators::new(&grid)?.with_gradient()?;
    let sampler = FieldSampler::new(hurst, grid);
    let runs = ensemble(cfg)?.map(|_, s| {
        let noise = ops.prepare(&cell_increments(&sampler.sample(s)))?;
        let u = ops.solve_nonlocal(&solver, &noise, &u0, &g)?;
        let v = ops.solve_coupled(&solver, &noise, &u0, &g)?;
        Ok((u, v))
    })?;
    let cols = runs
        .iter()
        .map(|(u, v)| u.valid_columns().min(v.valid_columns()))
        .min()
        .unwrap_or(0);
    let window = holder_window(&grid, cols);
    let mut rows = Vec::new();
    for (field, pick) in [("u", 0usize), ("companion", 1)] {
        let views: Vec<ArrayView2<f64>> = runs
            .iter()
            .map(|(u, v)| if pick == 0 { u.u().view() } else { v.companion().view() })
            .collect();
        for (axis, n, step) in [
            (Axis::Space, grid.n_x(), grid.dx()),
            (Axis::Time, grid.n_t(), grid.dt()),
        ] {
            let lags = fit_window_lags(n);
            let structure = structure_function(&views, axis, &lags, step, &window)?;
            let fit = holder_exponent(&structure)?;
            rows.push(HolderRow {
                field,
                axis,
                structure,
                fit,
            });
        }
    }
    Ok(rows)
}

pub struct GrowthStudy {
    pub x: f64,
    pub profile: VarianceProfile,
    pub fit: SlopeFit,
    pub expected: f64,
}

/// Variance growth of the stochastic convolution at `growth_x`.
pub fn variance_growth(cfg: &RunConfig) -> Result<GrowthStudy> {
    need_samples(cfg, MIN_SAMPLES, "variance-growth")?;
    let hurst = cfg.solver_hurst()?;
    let grid = cfg.grid()?;
    let j = cfg.growth_index()?;
    let kernel = ConvolutionKernel::new(KernelKind::P, &grid);
    let sampler = FieldSampler::new(hurst, grid);
    let zs: Vec<Array2<f64>> = ensemble(cfg)?.map(|_, s| Ok(kernel.apply(&cell_increments(&sampler.sample(s)))?))?;
    let views: Vec<ArrayView2<f64>> = zs.iter().map(|z| z.view()).collect();
    Ok(GrowthStudy {
        x: grid.x(j),
        profile: variance_profile(&views, j, &grid)?,
        fit: variance_growth_slope(&views, j, &grid, &hurst)?,
        expected: hurst.growth_exponent(),
    })
}
