//! Gaussian ball probabilities behind the linear-model sharp complexity.
//!
//! For `w ~ N(0, σ²I_d)` and a centre at distance `κ` from the origin,
//! `ball_probability(κ, σ, r, d) = P[‖w − κe₀‖ ≤ r]`. The first coordinate
//! is integrated numerically and the remaining `d − 1` enter through the
//! Gamma CDF of their squared norm.

use super::estimate::{ComplexityEstimate, Method};
use crate::error::{Error, Result};
use crate::models::LinearTarget;
use crate::numeric::quad::integrate;
use crate::numeric::special::{gamma_cdf, normal_cdf, normal_pdf};

fn check(kappa: f64, sigma_w: f64, r: f64, d: usize) -> Result<()> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::domain(format!("kappa = {kappa} must be non-negative")));
    }
    if !(sigma_w > 0.0) || !sigma_w.is_finite() {
        return Err(Error::domain(format!("sigma_w = {sigma_w} must be positive")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("radius {r} must be positive")));
    }
    if d == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    Ok(())
}

/// `P[‖w − κe₀‖ ≤ r]` for `w ~ N(0, σ_w²I_d)`, any radius `r > 0`.
pub fn ball_probability(kappa: f64, sigma_w: f64, r: f64, d: usize) -> Result<f64> {
    check(kappa, sigma_w, r, d)?;
    let s = sigma_w;
    if d == 1 {
        return Ok(normal_cdf((r - kappa) / s) - normal_cdf((-r - kappa) / s));
    }
    let shape = (d as f64 - 1.0) / 2.0;
    let scale = 2.0 * s * s;
    // x = r·sin φ removes the square-root behaviour at x = r
    let f = |phi: f64| {
        let (sn, cs) = phi.sin_cos();
        let x = r * sn;
        let rest = gamma_cdf(r * r * cs * cs, shape, scale);
        rest * (normal_pdf((kappa + x) / s) + normal_pdf((kappa - x) / s)) / s * r * cs
    };
    let v = integrate(f, 0.0, std::f64::consts::FRAC_PI_2, 0.0, 1e-13)?;
    Ok(v.clamp(0.0, 1.0))
}

/// The closed-form `q(κ, σ_w, ε)` on its stated domain `ε ∈ (0, 1]`.
/// It equals `P[‖w − κe₀‖² ≤ ε²]`.
pub fn q_closed_form(kappa: f64, sigma_w: f64, eps: f64, d: usize) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::domain(format!("eps = {eps} outside (0, 1]")));
    }
    ball_probability(kappa, sigma_w, eps, d)
}

/// Exact sharp complexity of a linear target under the orthonormal model:
/// the event `½‖w − w̃‖² + ‖g_⊥‖² ≤ ε²` is a ball of radius
/// `√(2(ε² − ‖g_⊥‖²))` around `w̃`.
pub fn linear_sharp_closed_form(g: &LinearTarget, sigma_w: f64, eps_sq: f64) -> Result<ComplexityEstimate> {
    if !(eps_sq > 0.0) {
        return Err(Error::domain("eps_sq must be positive"));
    }
    let slack = eps_sq - g.perp_sq;
    if slack <= 0.0 {
        return Ok(ComplexityEstimate::impossible(0, eps_sq, Method::ClosedFormQ));
    }
    let p = ball_probability(g.kappa(), sigma_w, (2.0 * slack).sqrt(), g.coeffs.len())?;
    if p <= 0.0 {
        return Err(Error::Numerical("ball probability underflowed".into()));
    }
    Ok(ComplexityEstimate::from_log_prob(p.ln(), 0.0, 0, 0, eps_sq, Method::ClosedFormQ))
}
