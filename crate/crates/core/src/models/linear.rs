//! Linear models over the orthonormal Legendre basis on `[-1, 1]`.

use super::Hypothesis;
use crate::error::{Error, Result};
use crate::numeric::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    LegendreOrthonormal,
}

/// `b_n(x) = √((2n+1)/2)·P_n(x)`, so that `∫_{-1}^{1} b_i b_j = δ_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub d: usize,
}

impl BasisSpec {
    pub fn legendre(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("basis size must be at least 1"));
        }
        Ok(Self { kind: BasisKind::LegendreOrthonormal, d })
    }

    /// Writes `b_0(x), …, b_{d-1}(x)` into `out`.
    pub fn values_into(&self, x: f64, out: &mut [f64]) {
        let (mut p0, mut p1) = (1.0, x);
        for n in 0..self.d {
            let p = match n {
                0 => 1.0,
                1 => x,
                _ => {
                    let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            out[n] = ((2 * n + 1) as f64 / 2.0).sqrt() * p;
        }
    }

    pub fn values(&self, x: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.d];
        self.values_into(x, &mut v);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelParams {
    pub w: Vec<f64>,
}

impl LinearModelParams {
    pub fn new(w: Vec<f64>) -> Self {
        Self { w }
    }

    pub fn d(&self) -> usize {
        self.w.len()
    }

    pub fn unit(d: usize, i: usize) -> Self {
        let mut w = vec![0.0; d];
        w[i] = 1.0;
        Self { w }
    }
}

pub fn eval_linear(p: &LinearModelParams, basis: &BasisSpec, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x = {x} outside [-1, 1]")));
    }
    if p.d() != basis.d {
        return Err(Error::invalid("coefficient count differs from basis size"));
    }
    Ok(eval_linear_unchecked(&p.w, basis, x))
}

pub(crate) fn eval_linear_unchecked(w: &[f64], basis: &BasisSpec, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    let mut s = 0.0;
    for (n, wn) in w.iter().enumerate() {
        let p = match n {
            0 => 1.0,
            1 => x,
            _ => {
                let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        s += wn * ((2 * n + 1) as f64 / 2.0).sqrt() * p;
    }
    debug_assert_eq!(w.len(), basis.d);
    s
}

/// `E_{x~U[-1,1]}[(f_w − f_{w̃})²] = ½‖w − w̃‖²`.
pub fn linear_l2_distance_sq(w: &LinearModelParams, w_target: &LinearModelParams) -> Result<f64> {
    if w.d() != w_target.d() {
        return Err(Error::invalid("coefficient vectors differ in length"));
    }
    Ok(0.5 * w.w.iter().zip(&w_target.w).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
}

/// A target for the linear family: realizable coefficients plus the mean
/// square of the component orthogonal to the span, `E_x[g_⊥²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTarget {
    pub coeffs: Vec<f64>,
    pub perp_sq: f64,
}

impl LinearTarget {
    pub fn realizable(coeffs: Vec<f64>) -> Self {
        Self { coeffs, perp_sq: 0.0 }
    }

    /// Projects `g` onto the first `d` basis functions with a Gauss–Legendre
    /// rule of `nodes` points.
    pub fn project<F: Fn(f64) -> f64>(g: F, basis: &BasisSpec, nodes: usize) -> Self {
        let (xs, ws) = gauss_legendre(nodes);
        let mut coeffs = vec![0.0; basis.d];
        let mut norm_sq = 0.0;
        let mut b = vec![0.0; basis.d];
        for (x, w) in xs.iter().zip(&ws) {
            let gx = g(*x);
            basis.values_into(*x, &mut b);
            for i in 0..basis.d {
                coeffs[i] += w * gx * b[i];
            }
            norm_sq += w * gx * gx;
        }
        let par: f64 = coeffs.iter().map(|c| c * c).sum();
        Self { coeffs, perp_sq: (0.5 * (norm_sq - par)).max(0.0) }
    }

    /// Norm of the realizable part, `κ = ‖w̃‖`.
    pub fn kappa(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Mean squared distance of `f_w` to the target.
    pub fn distance_sq(&self, w: &[f64]) -> f64 {
        0.5 * w.iter().zip(&self.coeffs).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + self.perp_sq
    }
}

/// A linear model together with its basis, usable as a predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHypothesis {
    pub basis: BasisSpec,
    pub w: Vec<f64>,
}

impl Hypothesis for LinearHypothesis {
    fn predict(&self, x: f64) -> f64 {
        eval_linear_unchecked(&self.w, &self.basis, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::quad::integrate;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        let b = BasisSpec::legendre(3).unwrap();
        for &x in &[-1.0, -0.3, 0.0, 0.8] {
            let v = eval_linear(&LinearModelParams::unit(3, 0), &b, x).unwrap();
            assert!((v - 0.707_106_781_186_547_5).abs() < 1e-15);
        }
        assert_eq!(eval_linear(&LinearModelParams::new(vec![0.0; 3]), &b, 0.4).unwrap(), 0.0);
        let v = eval_linear(&LinearModelParams::unit(3, 1), &b, 1.0).unwrap();
        assert!((v - 1.224_744_871_391_589).abs() < 1e-15);
        assert!(eval_linear(&LinearModelParams::unit(3, 1), &b, 1.1).is_err());
    }

    #[test]
    fn gram_matrix_is_identity() {
        let basis = BasisSpec::legendre(12).unwrap();
        for i in 0..12 {
            for j in 0..=i {
                let v = integrate(|x| basis.values(x)[i] * basis.values(x)[j], -1.0, 1.0, 1e-14, 1e-14).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-10, "({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn distance_examples() {
        let e0 = LinearModelParams::unit(3, 0);
        assert_eq!(linear_l2_distance_sq(&e0, &e0).unwrap(), 0.0);
        assert_eq!(linear_l2_distance_sq(&LinearModelParams::new(vec![0.0; 3]), &e0).unwrap(), 0.5);
        assert!(linear_l2_distance_sq(&e0, &LinearModelParams::unit(2, 0)).is_err());
    }

    #[test]
    fn projection_recovers_coefficients_and_residual() {
        let basis = BasisSpec::legendre(3).unwrap();
        let full = BasisSpec::legendre(5).unwrap();
        let g = |x: f64| {
            let b = full.values(x);
            0.3 * b[0] - 1.2 * b[2] + 0.5 * b[4]
        };
        let t = LinearTarget::project(g, &basis, 16);
        assert!((t.coeffs[0] - 0.3).abs() < 1e-13 && t.coeffs[1].abs() < 1e-13 && (t.coeffs[2] + 1.2).abs() < 1e-13);
        assert!((t.perp_sq - 0.125).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn half_norm_matches_quadrature(a in prop::collection::vec(-2.0f64..2.0, 4), b in prop::collection::vec(-2.0f64..2.0, 4)) {
            let basis = BasisSpec::legendre(4).unwrap();
            let q = integrate(|x| (eval_linear_unchecked(&a, &basis, x) - eval_linear_unchecked(&b, &basis, x)).powi(2), -1.0, 1.0, 1e-14, 1e-13).unwrap();
            let closed = linear_l2_distance_sq(&LinearModelParams::new(a), &LinearModelParams::new(b)).unwrap();
            prop_assert!((0.5 * q - closed).abs() < 1e-10 * (1.0 + closed));
        }
    }
}
