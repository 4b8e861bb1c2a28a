//! The `L^2_H` inner product of deterministic integrands.
//!
//! `E[int f dB^H int g dB^H]` is a four-fold integral of `f g` against
//! `|t - s|^{2h1 - 2} |x - y|^{2h2 - 2}`. The weight factorizes, so on a
//! grid it reduces to `sum(f .* (W_t g W_x))` with one cell-pair weight
//! matrix per axis.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

use super::HurstPair;

/// `4 h1 h2 (2 h1 - 1)(2 h2 - 1)`.
pub fn psi_prefactor(h: &HurstPair) -> f64 {
    4.0 * h.h1() * h.h2() * (2.0 * h.h1() - 1.0) * (2.0 * h.h2() - 1.0)
}

/// `Psi_h(t, s, x, y) = 4 h1 h2 (2h1-1)(2h2-1) |t-s|^{2h1-2} |x-y|^{2h2-2}`.
///
/// With this prefactor, `int Psi_h` over `[0,t]^2 x [0,x]^2` equals
/// `4 R(t, t; x, x)`; `lh2_inner` uses the normalization that reproduces
/// `R` itself.
pub fn psi_kernel(h: &HurstPair, t: f64, s: f64, x: f64, y: f64) -> Result<f64> {
    if t == s || x == y {
        return Err(Error::Singular(alloc::format!(
            "Psi_h is singular on t = s or x = y (t={t}, s={s}, x={x}, y={y})"
        )));
    }
    Ok(psi_prefactor(h)
        * libm::pow((t - s).abs(), 2.0 * h.h1() - 2.0)
        * libm::pow((x - y).abs(), 2.0 * h.h2() - 2.0))
}

/// How the cell-pair integrals of `|u - v|^{2h-2}` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairRule {
    /// Closed form for every cell pair (the fGn autocovariance).
    #[default]
    Exact,
    /// Closed form on the diagonal, midpoint rule off it.
    MidpointOffDiagonal,
}

/// `W[[i, k]] = h (2h - 1) int_{cell i} int_{cell k} |u - v|^{2h-2} du dv`
/// for `n` cells of width `step`.
pub fn pair_weights(h: f64, n: usize, step: f64, rule: PairRule) -> Array2<f64> {
    let e = 2.0 * h;
    let scale = libm::pow(step, e);
    Array2::from_shape_fn((n, n), |(i, k)| {
        let m = i.abs_diff(k) as f64;
        if m == 0.0 {
            return scale;
        }
        match rule {
            PairRule::Exact => {
                0.5 * scale * (libm::pow(m + 1.0, e) - 2.0 * libm::pow(m, e) + libm::pow(m - 1.0, e))
            }
            PairRule::MidpointOffDiagonal => h * (e - 1.0) * scale * libm::pow(m, e - 2.0),
        }
    })
}

/// `<f, g>_{L^2_H}` for integrands sampled at cell midpoints, normalized so
/// that indicators of `[0,t] x [0,x]` and `[0,s] x [0,y]` give
/// `R(t, s; x, y)`.
pub fn lh2_inner(f: &Array2<f64>, g: &Array2<f64>, h: &HurstPair, grid: &GridSpec) -> Result<f64> {
    lh2_inner_with(f, g, h, grid, PairRule::Exact)
}

pub fn lh2_inner_with(
    f: &Array2<f64>,
    g: &Array2<f64>,
    h: &HurstPair,
    grid: &GridSpec,
    rule: PairRule,
) -> Result<f64> {
    let shape = grid.cell_shape();
    for a in [f, g] {
        if a.dim() != shape {
            return Err(Error::Shape { expected: shape, got: a.dim() });
        }
    }
    let wt = pair_weights(h.h1(), shape.0, grid.dt(), rule);
    let wx = pair_weights(h.h2(), shape.1, grid.dx(), rule);
    let wgw = wt.dot(g).dot(&wx);
    Ok((f * &wgw).sum())
}

/// Discrete `(int (||f(s, .)||_{L^{1/h2}})^{1/h1} ds)^{2 h1}`, the mixed norm
/// that bounds the second moment of `int f dB^H`.
pub fn moment_bound_norm(f: &Array2<f64>, h: &HurstPair, grid: &GridSpec) -> Result<f64> {
    if f.dim() != grid.cell_shape() {
        return Err(Error::Shape { expected: grid.cell_shape(), got: f.dim() });
    }
    let (p_space, p_time) = (1.0 / h.h2(), 1.0 / h.h1());
    let outer: f64 = f
        .rows()
        .into_iter()
        .map(|row| {
            let inner: f64 = row.iter().map(|v| libm::pow(v.abs(), p_space)).sum::<f64>() * grid.dx();
            libm::pow(libm::pow(inner, h.h2()), p_time) * grid.dt()
        })
        .sum();
    Ok(libm::pow(outer, 2.0 * h.h1()))
}

/// Indicator of `[0, t] x [0, x]` at cell midpoints.
pub fn rectangle_indicator(grid: &GridSpec, t: f64, x: f64) -> Array2<f64> {
    Array2::from_shape_fn(grid.cell_shape(), |(i, k)| {
        if grid.t_mid(i) < t && grid.x_mid(k) < x {
            1.0
        } else {
            0.0
        }
    })
}
