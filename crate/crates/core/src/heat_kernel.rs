//! Dirichlet heat kernel of `d/dt - (1/2) d^2/dx^2` on the half-line.
//!
//! By the image method
//!
//! ```text
//! p(t, x, y) = phi(t, x - y) - phi(t, x + y),   phi(t, z) = exp(-z^2 / 2t) / sqrt(2 pi t)
//! ```
//!
//! and every derivative kind below is `psi(t, x - y) - psi(t, x + y)` with
//! `psi = poly(t, z) * phi(t, z)` for a closed-form polynomial factor.

use alloc::vec::Vec;
use core::f64::consts::PI;

use ndarray::Array2;

use crate::error::{domain, Result};
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    P,
    Dx,
    Dt,
    Dxx,
    Dxt,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [
        KernelKind::P,
        KernelKind::Dx,
        KernelKind::Dt,
        KernelKind::Dxx,
        KernelKind::Dxt,
    ];

    /// Power of `t^{-1}` in the Gaussian upper bound for this kind.
    pub fn time_exponent(self) -> f64 {
        match self {
            KernelKind::P => 0.5,
            KernelKind::Dx => 1.0,
            KernelKind::Dt | KernelKind::Dxx => 1.5,
            KernelKind::Dxt => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::P => "p",
            KernelKind::Dx => "dx",
            KernelKind::Dt => "dt",
            KernelKind::Dxx => "dxx",
            KernelKind::Dxt => "dxt",
        }
    }

    fn poly(self, t: f64, z: f64) -> f64 {
        match self {
            KernelKind::P => 1.0,
            KernelKind::Dx => -z / t,
            KernelKind::Dxx => (z * z - t) / (t * t),
            KernelKind::Dt => 0.5 * (z / t) * (z / t) - 0.5 / t,
            KernelKind::Dxt => z * (3.0 * t - z * z) / (2.0 * t * t * t),
        }
    }
}

/// `poly(a) phi(a) - poly(b) phi(b)` with every exponential multiplied by
/// `exp(shift)`. No argument checks.
#[inline]
fn image_pair(kind: KernelKind, t: f64, x: f64, y: f64, shift: f64) -> f64 {
    let a = x - y;
    let b = x + y;
    let norm = 1.0 / libm::sqrt(2.0 * PI * t);
    let ea = libm::exp(shift - a * a / (2.0 * t));
    let eb = libm::exp(shift - b * b / (2.0 * t));
    norm * (kind.poly(t, a) * ea - kind.poly(t, b) * eb)
}

#[inline]
pub(crate) fn kernel_unchecked(kind: KernelKind, t: f64, x: f64, y: f64) -> f64 {
    image_pair(kind, t, x, y, 0.0)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(domain!("kernel time must be positive and finite, got {t}"))
    }
}

/// Green function `p(t, x, y)`.
pub fn p_eval(t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    Ok(kernel_unchecked(KernelKind::P, t, x, y))
}

/// Closed-form derivative of `p`. `KernelKind::P` is accepted and returns `p`.
pub fn p_derivative(kind: KernelKind, t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    Ok(kernel_unchecked(kind, t, x, y))
}

/// `exp((x-y)^2 / 2t)` times the derivative: the leading image's Gaussian is
/// divided out, so values stay in normal range where `p_derivative`
/// underflows.
pub fn p_derivative_scaled(kind: KernelKind, t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    let a = x - y;
    Ok(image_pair(kind, t, x, y, a * a / (2.0 * t)))
}

/// `|kernel| / (t^{-rho} exp(-(x-y)^2 / 4t))`.
///
/// The Gaussian factor is folded into the exponentials before evaluation,
/// so the ratio stays finite where both numerator and denominator underflow.
pub fn bound_ratio(kind: KernelKind, t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    let a = x - y;
    let shift = a * a / (4.0 * t);
    Ok(libm::pow(t, kind.time_exponent()) * image_pair(kind, t, x, y, shift).abs())
}

/// Regression lock for [`bound_ratio`]: the ratio depends on `(x, y)` only
/// through `(x / sqrt(t), y / sqrt(t))`, and these are its suprema over the
/// quarter plane rounded up in the third decimal.
pub fn bound_ratio_lock(kind: KernelKind) -> f64 {
    match kind {
        KernelKind::P => 0.399,
        KernelKind::Dx => 0.685,
        KernelKind::Dxx => 0.577,
        KernelKind::Dt => 0.289,
        KernelKind::Dxt => 0.765,
    }
}

/// Poisson-summation estimate of the composite trapezoid error for a
/// Gaussian of variance `t` sampled at spacing `dx`.
pub fn trapezoid_error_estimate(t: f64, dx: f64) -> f64 {
    2.0 * libm::exp(-2.0 * PI * PI * t / (dx * dx))
}

const QUADRATURE_WARN_TOL: f64 = 1e-6;

/// Initial datum `u0` together with its derivative and the Hölder exponent
/// of that derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    samples: Vec<f64>,
    derivative: Vec<f64>,
    kappa: f64,
}

impl InitialData {
    /// `samples[0]` must vanish (compatibility with `u(t, 0) = 0`).
    pub fn new(samples: Vec<f64>, derivative: Vec<f64>, kappa: f64) -> Result<Self> {
        if samples.len() != derivative.len() {
            return Err(domain!(
                "u0 has {} samples but u0' has {}",
                samples.len(),
                derivative.len()
            ));
        }
        if samples.len() < 3 {
            return Err(domain!("initial data needs at least 3 samples"));
        }
        if let Some(j) = samples.iter().chain(&derivative).position(|v| !v.is_finite()) {
            return Err(domain!("initial data has a non-finite entry at flat index {j}"));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(domain!("Hölder exponent kappa must lie in (0, 1], got {kappa}"));
        }
        let scale = samples.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if samples[0].abs() > 1e-12 * scale {
            return Err(domain!(
                "u0(0) = {} violates the boundary condition u(t, 0) = 0",
                samples[0]
            ));
        }
        let mut samples = samples;
        samples[0] = 0.0;
        Ok(Self { samples, derivative, kappa })
    }

    /// Samples `f` and `df` on the space nodes of `grid`.
    pub fn from_fn<F, D>(grid: &GridSpec, f: F, df: D, kappa: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let xs = (0..=grid.n_x()).map(|j| grid.x(j));
        let samples = xs.clone().map(&f).collect();
        let derivative = xs.map(&df).collect();
        Self::new(samples, derivative, kappa)
    }

    pub fn zero(grid: &GridSpec) -> Self {
        let n = grid.n_x() + 1;
        Self {
            samples: alloc::vec![0.0; n],
            derivative: alloc::vec![0.0; n],
            kappa: 1.0,
        }
    }

    /// Ramp `x` bent flat at `x0`:
    /// `u0(x) = x - x^{1+kappa} / ((1+kappa) x0^kappa)` on `[0, x0]`, constant
    /// afterwards. `u0'(x) = 1 - (x/x0)^kappa` is `kappa`-Hölder with
    /// constant `x0^{-kappa}`.
    pub fn ramp(grid: &GridSpec, x0: f64, kappa: f64) -> Result<Self> {
        if !(x0.is_finite() && x0 > 0.0) {
            return Err(domain!("ramp corner must be positive, got {x0}"));
        }
        let top = x0 * kappa / (1.0 + kappa);
        Self::from_fn(
            grid,
            |x| {
                if x < x0 {
                    x - libm::pow(x, 1.0 + kappa) / ((1.0 + kappa) * libm::pow(x0, kappa))
                } else {
                    top
                }
            },
            |x| if x < x0 { 1.0 - libm::pow(x / x0, kappa) } else { 0.0 },
            kappa,
        )
    }

    /// Odd-reflected Gaussian `e^{-(x-c)^2/2w^2} - e^{-(x+c)^2/2w^2}`.
    pub fn smooth_bump(grid: &GridSpec, center: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0 && center.is_finite()) {
            return Err(domain!("bump needs finite center and positive width"));
        }
        let gauss = move |z: f64| libm::exp(-z * z / (2.0 * width * width));
        Self::from_fn(
            grid,
            |x| gauss(x - center) - gauss(x + center),
            |x| (-(x - center) * gauss(x - center) + (x + center) * gauss(x + center)) / (width * width),
            1.0,
        )
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn derivative_samples(&self) -> &[f64] {
        &self.derivative
    }

    pub fn holder_kappa(&self) -> f64 {
        self.kappa
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest `|u0'(x_i) - u0'(x_j)| / |x_i - x_j|^kappa` over node pairs.
    pub fn holder_quotient(&self, dx: f64) -> f64 {
        let n = self.derivative.len();
        let mut q = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = libm::pow((j - i) as f64 * dx, self.kappa);
                q = q.max((self.derivative[j] - self.derivative[i]).abs() / d);
            }
        }
        q
    }
}

/// `int_D p(t, x, y) u0(y) dy` at every space node, by the composite
/// trapezoid rule on `[0, L]`.
///
/// For `t < dt / 2` the samples are returned unchanged: the kernel is then
/// narrower than a cell and the quadrature would alias.
pub fn initial_convolution(u0: &InitialData, t: f64, grid: &GridSpec) -> Result<Vec<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(domain!("convolution time must be >= 0, got {t}"));
    }
    if u0.len() != grid.n_x() + 1 {
        return Err(domain!(
            "u0 has {} samples but the grid has {} space nodes",
            u0.len(),
            grid.n_x() + 1
        ));
    }
    if t < 0.5 * grid.dt() {
        return Ok(u0.samples.clone());
    }
    let err = trapezoid_error_estimate(t, grid.dx());
    if err > QUADRATURE_WARN_TOL {
        log::warn!("initial_convolution: grid too coarse for t={t}: trapezoid error estimate {err:e}");
    }
    let w = grid.trapezoid_weights();
    let out = (0..=grid.n_x())
        .map(|j| {
            let x = grid.x(j);
            (0..=grid.n_x())
                .map(|k| w[k] * kernel_unchecked(KernelKind::P, t, x, grid.x(k)) * u0.samples[k])
                .sum()
        })
        .collect();
    Ok(out)
}

/// Trapezoid discretization of `f -> int_0^L K(tau, x_j, y) f(y) dy` on the
/// space nodes: entry `(j, k) = w_k K(tau, x_j, x_k)`.
pub fn propagator_matrix(kind: KernelKind, tau: f64, grid: &GridSpec) -> Result<Array2<f64>> {
    check_time(tau)?;
    let w = grid.trapezoid_weights();
    let n = grid.n_x() + 1;
    Ok(Array2::from_shape_fn((n, n), |(j, k)| {
        w[k] * kernel_unchecked(kind, tau, grid.x(j), grid.x(k))
    }))
}

/// Trapezoid value of `int_0^L p(s, x, z) p(t - s, z, y) dz`, which the
/// semigroup property equates with `p(t, x, y)`.
pub fn semigroup_composition(s: f64, t: f64, x: f64, y: f64, grid: &GridSpec) -> Result<f64> {
    check_time(s)?;
    check_time(t - s)?;
    let w = grid.trapezoid_weights();
    Ok((0..=grid.n_x())
        .map(|k| {
            let z = grid.x(k);
            w[k] * kernel_unchecked(KernelKind::P, s, x, z)
                * kernel_unchecked(KernelKind::P, t - s, z, y)
        })
        .sum())
}

/// Trapezoid value of `int_0^L p(t, x, y) dy`.
pub fn kernel_mass(t: f64, x: f64, grid: &GridSpec) -> Result<f64> {
    check_time(t)?;
    let w = grid.trapezoid_weights();
    Ok((0..=grid.n_x())
        .map(|k| w[k] * kernel_unchecked(KernelKind::P, t, x, grid.x(k)))
        .sum())
}
