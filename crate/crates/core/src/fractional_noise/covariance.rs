use crate::error::{domain, Result};

use super::HurstPair;

/// fBm covariance `(a^{2h} + b^{2h} - |a - b|^{2h}) / 2`.
pub fn cov_1d(h: f64, a: f64, b: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(domain!("Hurst index must lie in (0, 1), got {h}"));
    }
    if !(a >= 0.0 && b >= 0.0) {
        return Err(domain!("fBm covariance needs a, b >= 0, got ({a}, {b})"));
    }
    Ok(cov_1d_unchecked(h, a, b))
}

#[inline]
pub(crate) fn cov_1d_unchecked(h: f64, a: f64, b: f64) -> f64 {
    let e = 2.0 * h;
    0.5 * (libm::pow(a, e) + libm::pow(b, e) - libm::pow((a - b).abs(), e))
}

/// Covariance `E[B(t, x) B(s, y)]` of the fractional field, the product of
/// the temporal and spatial fBm covariances.
pub fn covariance(h: &HurstPair, t: f64, s: f64, x: f64, y: f64) -> Result<f64> {
    Ok(cov_1d(h.h1(), t, s)? * cov_1d(h.h2(), x, y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(cov_1d(0.7, 3.0, 0.0).unwrap(), 0.0);
        assert!((cov_1d(0.75, 1.0, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let h = HurstPair::new(0.8, 0.7).unwrap();
        assert!((covariance(&h, 1.0, 1.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(covariance(&h, 0.3, 0.9, 2.0, 0.0).unwrap(), 0.0);
        assert!(cov_1d(1.0, 1.0, 1.0).is_err());
        assert!(cov_1d(0.7, -1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn brownian_case_is_min(a in 0.0f64..10.0, b in 0.0f64..10.0) {
            prop_assert!((cov_1d(0.5, a, b).unwrap() - a.min(b)).abs() < 1e-12);
        }

        #[test]
        fn symmetric_with_power_diagonal(h in 0.01f64..0.99, a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let ab = cov_1d(h, a, b).unwrap();
            prop_assert_eq!(ab, cov_1d(h, b, a).unwrap());
            prop_assert!((cov_1d(h, a, a).unwrap() - libm::pow(a, 2.0 * h)).abs() <= 1e-12 * (1.0 + libm::pow(a, 2.0 * h)));
        }

        #[test]
        fn field_covariance_factorizes(h1 in 0.51f64..0.99, h2 in 0.51f64..0.99,
                                        t in 0.0f64..2.0, s in 0.0f64..2.0, x in 0.0f64..5.0, y in 0.0f64..5.0) {
            let h = HurstPair::sampling_only(h1, h2).unwrap();
            let r = covariance(&h, t, s, x, y).unwrap();
            prop_assert_eq!(r, cov_1d(h1, t, s).unwrap() * cov_1d(h2, x, y).unwrap());
            prop_assert_eq!(r, covariance(&h, s, t, y, x).unwrap());
            let diag = covariance(&h, t, t, x, x).unwrap();
            prop_assert!((diag - libm::pow(t, 2.0 * h1) * libm::pow(x, 2.0 * h2)).abs() <= 1e-12 * (1.0 + diag));
        }
    }
}
