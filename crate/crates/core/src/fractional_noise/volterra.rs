//! Square-integrable kernel `K_H` linking the fractional field to a
//! Brownian sheet, `B^H(t, x) = int_0^t int_0^x K_H(t, s; x, y) B(ds, dy)`.
//!
//! `K_H = c_H k_{h1}(t, s) k_{h2}(x, y)` with the one-dimensional factor
//!
//! ```text
//! k_h(t, s) = s^{1/2 - h} int_s^t (u - s)^{h - 3/2} u^{h - 1/2} du.
//! ```
//!
//! The inner integral is evaluated after `u = s + r^{1/(h - 1/2)}`, which
//! turns the endpoint singularity into the bounded integrand
//! `(s + r^{1/(h-1/2)})^{h-1/2} / (h - 1/2)`.

use crate::error::{domain, Result};
use crate::quadrature::GaussLegendre;

use super::{covariance, HurstPair};

const INNER_NODES: usize = 24;
const OUTER_NODES: usize = 24;
/// Panel breaks in the outer variable, graded towards the upper endpoint
/// where `k_h(t, s)` behaves like `(t - s)^{h - 1/2}`.
const OUTER_BREAKS: [f64; 8] = [0.0, 0.5, 0.8, 0.95, 0.99, 0.999, 0.9999, 1.0];

/// Quadrature state for `k_h` and its `L^2` Gram integrals.
#[derive(Debug, Clone)]
pub struct VolterraQuadrature {
    inner: GaussLegendre,
    outer: GaussLegendre,
}

impl Default for VolterraQuadrature {
    fn default() -> Self {
        Self {
            inner: GaussLegendre::new(INNER_NODES),
            outer: GaussLegendre::new(OUTER_NODES),
        }
    }
}

impl VolterraQuadrature {
    /// `int_s^t (u - s)^{h - 3/2} u^{h - 1/2} du` for `0 <= s <= t`.
    pub fn integral(&self, h: f64, t: f64, s: f64) -> f64 {
        if t <= s {
            return 0.0;
        }
        let beta = h - 0.5;
        let r_max = libm::pow(t - s, beta);
        let integrand = |r: f64| libm::pow(s + libm::pow(r, 1.0 / beta), beta);
        // the integrand bends where r^{1/beta} ~ s
        let knee = libm::pow(s, beta);
        let v = if knee > 0.0 && knee < r_max {
            let far = if 2.0 * knee < r_max { 2.0 * knee } else { 0.5 * (knee + r_max) };
            self.inner
                .integrate_panels(&[0.0, 0.5 * knee, knee, far, r_max], integrand)
        } else {
            self.inner.integrate(0.0, r_max, integrand)
        };
        v / beta
    }

    /// One-dimensional factor `k_h(t, s)` (without `c_H`).
    pub fn factor(&self, h: f64, t: f64, s: f64) -> f64 {
        if s <= 0.0 || t <= s {
            return 0.0;
        }
        libm::pow(s, 0.5 - h) * self.integral(h, t, s)
    }

    /// `int_0^{min(t, t')} k_h(t, s) k_h(t', s) ds`.
    ///
    /// With `s = m w^q`, `q = 1 / (2 - 2h)`, the `s^{1 - 2h}` singularity at
    /// the origin cancels against the Jacobian.
    pub fn gram(&self, h: f64, t: f64, t2: f64) -> f64 {
        let m = t.min(t2);
        if m <= 0.0 {
            return 0.0;
        }
        let q = 1.0 / (2.0 - 2.0 * h);
        let scale = libm::pow(m, 2.0 - 2.0 * h) * q;
        let v = self.outer.integrate_panels(&OUTER_BREAKS, |w| {
            let s = m * libm::pow(w, q);
            if s <= 0.0 {
                let v0 = libm::pow(t, 2.0 * h - 1.0) / (2.0 * h - 1.0);
                let v1 = libm::pow(t2, 2.0 * h - 1.0) / (2.0 * h - 1.0);
                return v0 * v1;
            }
            self.integral(h, t, s) * self.integral(h, t2, s)
        });
        scale * v
    }
}

/// `K_H` with a fixed normalization constant `c_H`.
#[derive(Debug, Clone)]
pub struct KhKernel {
    hurst: HurstPair,
    c_h: f64,
    quad: VolterraQuadrature,
}

impl KhKernel {
    pub fn new(hurst: HurstPair, c_h: f64) -> Self {
        Self {
            hurst,
            c_h,
            quad: VolterraQuadrature::default(),
        }
    }

    /// Chooses `c_H` so that `||K_H^* 1_{[0,T] x [0,L]}||^2_{L^2}` equals
    /// `R(T, T; L, L)`.
    pub fn calibrate(hurst: HurstPair, horizon: f64, length: f64) -> Result<Self> {
        let quad = VolterraQuadrature::default();
        let unscaled = quad.gram(hurst.h1(), horizon, horizon) * quad.gram(hurst.h2(), length, length);
        let target = covariance::covariance(&hurst, horizon, horizon, length, length)?;
        if !(unscaled > 0.0 && unscaled.is_finite()) {
            return Err(domain!("degenerate reference rectangle [0,{horizon}] x [0,{length}]"));
        }
        Ok(Self {
            hurst,
            c_h: libm::sqrt(target / unscaled),
            quad,
        })
    }

    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    pub fn hurst(&self) -> &HurstPair {
        &self.hurst
    }

    pub fn eval(&self, t: f64, s: f64, x: f64, y: f64) -> Result<f64> {
        kh_eval_with(&self.quad, &self.hurst, t, s, x, y, self.c_h)
    }

    /// `(K_H^* 1_{[0,t] x [0,x]})(s, y)`.
    pub fn star_indicator(&self, t: f64, x: f64, s: f64, y: f64) -> f64 {
        if s > 0.0 && s < t && y > 0.0 && y < x {
            self.c_h * self.quad.factor(self.hurst.h1(), t, s) * self.quad.factor(self.hurst.h2(), x, y)
        } else {
            0.0
        }
    }

    /// `<K_H^* 1_{[0,t] x [0,x]}, K_H^* 1_{[0,t2] x [0,x2]}>_{L^2}`.
    pub fn gram(&self, t: f64, t2: f64, x: f64, x2: f64) -> f64 {
        self.c_h
            * self.c_h
            * self.quad.gram(self.hurst.h1(), t, t2)
            * self.quad.gram(self.hurst.h2(), x, x2)
    }
}

fn kh_eval_with(
    quad: &VolterraQuadrature,
    h: &HurstPair,
    t: f64,
    s: f64,
    x: f64,
    y: f64,
    c_h: f64,
) -> Result<f64> {
    if !(s > 0.0 && s < t) {
        return Err(domain!("K_H needs 0 < s < t, got s={s}, t={t}"));
    }
    if !(y > 0.0 && y < x) {
        return Err(domain!("K_H needs 0 < y < x, got y={y}, x={x}"));
    }
    Ok(c_h * quad.factor(h.h1(), t, s) * quad.factor(h.h2(), x, y))
}

/// `K_H(t, s; x, y)` for `0 < s < t`, `0 < y < x`.
pub fn kh_eval(h: &HurstPair, t: f64, s: f64, x: f64, y: f64, c_h: f64) -> Result<f64> {
    kh_eval_with(&VolterraQuadrature::default(), h, t, s, x, y, c_h)
}

/// `(K_H^* 1_{[0,t] x [0,x]})(s, y) = K_H(t, s; x, y) 1_{[0,t] x [0,x]}(s, y)`.
pub fn kh_star_indicator(h: &HurstPair, c_h: f64, t: f64, x: f64, s: f64, y: f64) -> f64 {
    KhKernel::new(*h, c_h).star_indicator(t, x, s, y)
}

/// Mixed derivative `d^2 K_H / dt dx`, evaluated only on `s < t`, `y < x`.
pub fn kh_mixed_derivative(h: &HurstPair, t: f64, s: f64, x: f64, y: f64, c_h: f64) -> Result<f64> {
    if !(s > 0.0 && s < t && y > 0.0 && y < x) {
        return Err(domain!("mixed derivative of K_H is supported on 0 < s < t, 0 < y < x"));
    }
    let (h1, h2) = (h.h1(), h.h2());
    Ok(c_h
        * libm::pow(t - s, h1 - 1.5)
        * libm::pow(t / s, h1 - 0.5)
        * libm::pow(x - y, h2 - 1.5)
        * libm::pow(x / y, h2 - 0.5))
}

/// Closed-form Molchan constant `prod_i sqrt(h_i (2h_i - 1) / B(2 - 2h_i, h_i - 1/2))`.
pub fn analytic_c_h(h: &HurstPair) -> f64 {
    let one = |h: f64| {
        let (a, b) = (2.0 - 2.0 * h, h - 0.5);
        let beta = libm::exp(libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b));
        libm::sqrt(h * (2.0 * h - 1.0) / beta)
    };
    one(h.h1()) * one(h.h2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h() -> HurstPair {
        HurstPair::new(0.8, 0.7).unwrap()
    }

    #[test]
    fn inner_integral_at_zero_is_closed_form() {
        // s = 0: int_0^t u^{2h-2} du = t^{2h-1} / (2h-1)
        let q = VolterraQuadrature::default();
        for &hh in &[0.6, 0.75, 0.9] {
            let v = q.integral(hh, 1.7, 0.0);
            let exact = libm::pow(1.7, 2.0 * hh - 1.0) / (2.0 * hh - 1.0);
            assert!((v - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn inner_integral_matches_brute_force() {
        // fine midpoint sum after the substitution as an independent check
        let q = VolterraQuadrature::default();
        let (hh, t, s) = (0.7, 1.0, 0.3);
        let beta = hh - 0.5;
        let r_max = libm::pow(t - s, beta);
        let n = 200_000;
        let dr = r_max / n as f64;
        let brute: f64 = (0..n)
            .map(|i| libm::pow(s + libm::pow((i as f64 + 0.5) * dr, 1.0 / beta), beta) * dr)
            .sum::<f64>()
            / beta;
        assert!((q.integral(hh, t, s) - brute).abs() < 1e-8 * brute);
    }

    #[test]
    fn vanishes_as_t_approaches_s_and_is_monotone() {
        // k(t, s) ~ (t - s)^{h1 - 1/2} as t -> s+
        let near = |d: f64| kh_eval(&h(), 0.5 + d, 0.5, 1.0, 0.5, 1.0).unwrap();
        let ratio = near(1e-12) / near(1e-6);
        assert!((ratio / libm::pow(1e-6, 0.3) - 1.0).abs() < 1e-3);
        assert!(near(1e-12) < 1e-3 * near(0.5));
        let mut prev = 0.0;
        for k in 1..10 {
            let t = 0.5 + 0.1 * k as f64;
            let cur = kh_eval(&h(), t, 0.5, 1.0, 0.5, 1.0).unwrap();
            assert!(cur > prev);
            prev = cur;
        }
        let mut prev = 0.0;
        for k in 1..10 {
            let x = 0.5 + 0.1 * k as f64;
            let cur = kh_eval(&h(), 1.0, 0.5, x, 0.5, 1.0).unwrap();
            assert!(cur > prev);
            prev = cur;
        }
    }

    #[test]
    fn domain_errors() {
        assert!(kh_eval(&h(), 0.5, 0.5, 1.0, 0.5, 1.0).is_err());
        assert!(kh_eval(&h(), 1.0, 0.5, 0.5, 0.5, 1.0).is_err());
        assert!(kh_mixed_derivative(&h(), 1.0, 1.5, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn star_indicator_support() {
        let k = KhKernel::new(h(), 1.0);
        assert_eq!(k.star_indicator(1.0, 1.0, 1.5, 0.5), 0.0);
        assert_eq!(k.star_indicator(1.0, 1.0, 0.5, 1.2), 0.0);
        let inside = k.star_indicator(1.0, 1.0, 0.5, 0.5);
        assert_eq!(inside, k.eval(1.0, 0.5, 1.0, 0.5).unwrap());
        assert_eq!(kh_star_indicator(&h(), 1.0, 1.0, 1.0, 0.5, 0.5), inside);
    }

    #[test]
    fn mixed_derivative_matches_finite_difference() {
        let (t, s, x, y) = (1.0, 0.4, 1.2, 0.5);
        let d = 1e-4;
        let k = |t: f64, x: f64| kh_eval(&h(), t, s, x, y, 1.0).unwrap();
        let fd = (k(t + d, x + d) - k(t + d, x - d) - k(t - d, x + d) + k(t - d, x - d)) / (4.0 * d * d);
        let exact = kh_mixed_derivative(&h(), t, s, x, y, 1.0).unwrap();
        assert!((fd - exact).abs() < 1e-4 * exact.abs(), "fd={fd} exact={exact}");
    }

    #[test]
    fn calibration_recovers_molchan_constant() {
        let k = KhKernel::calibrate(h(), 1.0, 2.0).unwrap();
        let exact = analytic_c_h(&h());
        assert!((k.c_h() - exact).abs() < 1e-3 * exact, "{} vs {exact}", k.c_h());
    }

    #[test]
    fn gram_reproduces_covariance() {
        let hp = h();
        let k = KhKernel::calibrate(hp, 1.0, 2.0).unwrap();
        let pts = [(0.3, 0.4), (1.0, 2.0), (0.7, 1.1), (0.05, 1.9)];
        for &(t, x) in &pts {
            for &(t2, x2) in &pts {
                let r = covariance(&hp, t, t2, x, x2).unwrap();
                let g = k.gram(t, t2, x, x2);
                assert!((g - r).abs() < 1e-3 * r, "({t},{x}) ({t2},{x2}): {g} vs {r}");
            }
        }
    }
}
