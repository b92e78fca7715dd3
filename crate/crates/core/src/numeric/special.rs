//! Normal and Gamma distribution functions.

use libm::{erf, erfc};
use statrs::function::gamma::gamma_lr;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    if z < -1.0 {
        0.5 * erfc(-z / std::f64::consts::SQRT_2)
    } else {
        0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
    }
}

/// Upper tail `1 − Φ(z)` without cancellation.
pub fn normal_sf(z: f64) -> f64 {
    normal_cdf(-z)
}

/// `Φ(b) − Φ(a)` computed on the side of the mean where it is accurate.
pub fn normal_interval_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

/// Inverse standard normal CDF, polished by Newton steps on `normal_cdf`.
pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p);
    for _ in 0..2 {
        let pdf = normal_pdf(z);
        if pdf == 0.0 || !z.is_finite() {
            break;
        }
        z -= (normal_cdf(z) - p) / pdf;
    }
    z
}

pub fn normal_log_density(x: f64, var: f64) -> f64 {
    -0.5 * x * x / var - 0.5 * var.ln() - LN_SQRT_2PI
}

/// CDF of the Gamma distribution with the given shape and scale.
pub fn gamma_cdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(shape, x / scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        let c = normal_cdf(1.959_963_984_540_054);
        assert!((c - 0.975).abs() < 1e-14, "{c:e}");
        assert!((normal_sf(8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
        assert!((normal_interval_mass(6.0, 7.0) - (normal_sf(6.0) - normal_sf(7.0))).abs() < 1e-25);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((normal_cdf(0.5 * std::f64::consts::SQRT_2) - 0.760_249_938_906_523_3).abs() < 1e-15);
    }

    #[test]
    fn gamma_cdf_matches_exponential() {
        // shape 1 is the exponential law
        for &x in &[0.01, 0.5, 3.0] {
            assert!((gamma_cdf(x, 1.0, 2.0) - (1.0 - (-x / 2.0_f64).exp())).abs() < 1e-14);
        }
        // shape 1/2, scale 2 is chi-square with one degree of freedom
        let z: f64 = 0.7;
        assert!((gamma_cdf(z * z, 0.5, 2.0) - (2.0 * normal_cdf(z) - 1.0)).abs() < 1e-14);
    }
}
