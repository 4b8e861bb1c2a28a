use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

use crate::error::{config, Result};
use crate::rng::NormalStream;

type DriftFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Drift `g(u, v)` together with a Lipschitz constant `L`,
/// `|g(a, b) - g(c, d)| <= L (|a - c| + |b - d|)`.
#[derive(Clone)]
pub struct DriftSpec {
    g: Arc<DriftFn>,
    lipschitz: f64,
    label: String,
}

impl fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftSpec")
            .field("label", &self.label)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl DriftSpec {
    pub fn new<F>(g: F, lipschitz: f64, label: &str) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(config!("Lipschitz constant must be positive, got {lipschitz}"));
        }
        Ok(Self {
            g: Arc::new(g),
            lipschitz,
            label: label.into(),
        })
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0, 1.0, "zero").unwrap()
    }

    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(config!("constant drift must be finite, got {c}"));
        }
        Self::new(move |_, _| c, 1.0, &alloc::format!("constant({c})"))
    }

    /// `clamp(a u + b v, -clip, clip)`.
    pub fn linear(a: f64, b: f64, clip: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(config!("linear drift coefficients must be finite"));
        }
        if !(clip > 0.0) {
            return Err(config!("linear drift clip must be positive, got {clip}"));
        }
        let l = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        Self::new(
            move |u, v| (a * u + b * v).clamp(-clip, clip),
            l,
            &alloc::format!("linear({a},{b};clip={clip})"),
        )
    }

    /// `scale * sin(u + v)`.
    pub fn sine(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale != 0.0) {
            return Err(config!("sine drift scale must be finite and nonzero, got {scale}"));
        }
        Self::new(
            move |u, v| scale * libm::sin(u + v),
            scale.abs(),
            &alloc::format!("sine({scale})"),
        )
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        (self.g)(u, v)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Checks the Lipschitz bound on `n` random pairs of points drawn from
    /// `N(0, spread^2)`.
    pub fn spot_check(&self, seed: u64, n: usize, spread: f64) -> Result<()> {
        let mut rng = NormalStream::new(seed, 0);
        for _ in 0..n {
            let p: [f64; 4] = core::array::from_fn(|_| spread * rng.next_normal());
            let lhs = (self.eval(p[0], p[1]) - self.eval(p[2], p[3])).abs();
            let rhs = self.lipschitz * ((p[0] - p[2]).abs() + (p[1] - p[3]).abs());
            if lhs > rhs * (1.0 + 1e-12) + 1e-300 {
                return Err(config!(
                    "drift {} violates its Lipschitz bound {} at ({}, {}) vs ({}, {})",
                    self.label,
                    self.lipschitz,
                    p[0],
                    p[1],
                    p[2],
                    p[3]
                ));
            }
        }
        Ok(())
    }
}
