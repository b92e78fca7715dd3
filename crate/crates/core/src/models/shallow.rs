//! Single-hidden-layer ReLU networks `Σ w2_i·w1_i·[x − b1_i]_+ + b2`.

use super::Hypothesis;
use crate::error::{Error, Result};
use crate::pwl::PwlFunction;

/// Hidden bias given to nodes that should not act on `[0, 1]`.
pub const INACTIVE_BIAS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ShallowNetParams {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: f64,
}

impl ShallowNetParams {
    pub fn new(w1: Vec<f64>, w2: Vec<f64>, b1: Vec<f64>, b2: f64) -> Result<Self> {
        if w1.len() != w2.len() || w1.len() != b1.len() {
            return Err(Error::invalid("w1, w2 and b1 must have one entry per node"));
        }
        Ok(Self { w1, w2, b1, b2 })
    }

    pub fn zeros(k: usize) -> Self {
        Self { w1: vec![0.0; k], w2: vec![0.0; k], b1: vec![0.0; k], b2: 0.0 }
    }

    pub fn k(&self) -> usize {
        self.w1.len()
    }

    /// Effective slope `w1_i·w2_i` of node `i`.
    pub fn effective(&self, i: usize) -> f64 {
        self.w1[i] * self.w2[i]
    }

    pub fn forward(&self, x: f64) -> f64 {
        self.b2
            + (0..self.k()).map(|i| self.w2[i] * self.w1[i] * (x - self.b1[i]).max(0.0)).sum::<f64>()
    }

    /// `½(‖w1‖² + ‖w2‖²)`.
    pub fn weight_norm_cost(&self) -> f64 {
        0.5 * self.w1.iter().chain(&self.w2).map(|w| w * w).sum::<f64>()
    }

    /// Flat layout `[w1.., w2.., b1.., b2]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.k() + 1);
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.w2);
        v.extend_from_slice(&self.b1);
        v.push(self.b2);
        v
    }

    pub fn from_flat(v: &[f64]) -> Result<Self> {
        if v.len() % 3 != 1 {
            return Err(Error::invalid("flat parameter length must be 3k + 1"));
        }
        let k = v.len() / 3;
        Ok(Self {
            w1: v[..k].to_vec(),
            w2: v[k..2 * k].to_vec(),
            b1: v[2 * k..3 * k].to_vec(),
            b2: v[3 * k],
        })
    }

    pub fn distance_sq(&self, other: &ShallowNetParams) -> f64 {
        self.to_flat().iter().zip(other.to_flat()).map(|(a, b)| (a - b).powi(2)).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.to_flat().iter().map(|x| x * x).sum()
    }

    /// Knots `(b1_i, w1_i·w2_i)` in node order.
    pub fn raw_knots(&self) -> Vec<(f64, f64)> {
        (0..self.k()).map(|i| (self.b1[i], self.effective(i))).collect()
    }
}

impl Hypothesis for ShallowNetParams {
    fn predict(&self, x: f64) -> f64 {
        self.forward(x)
    }
}

/// The function computed on `[0, 1]` as a canonical piecewise-linear map.
pub fn shallow_to_pwl(theta: &ShallowNetParams) -> PwlFunction {
    PwlFunction::canonicalize(&theta.raw_knots(), theta.b2).expect("finite parameters")
}

/// Knot-wise realization `w2 = v/√|v|`, `w1 = √|v|`, `b1 = t`, with the
/// remaining nodes parked at `INACTIVE_BIAS` with zero weights.
pub fn min_norm_realization(g: &PwlFunction, k: usize) -> Result<ShallowNetParams> {
    if g.domain() != (0.0, 1.0) {
        return Err(Error::domain("shallow networks represent functions on [0, 1]"));
    }
    let c = g.knots().len();
    if c > k {
        return Err(Error::invalid(format!("{c} knots exceed the node budget {k}")));
    }
    let mut theta = ShallowNetParams::zeros(k);
    theta.b2 = g.bias();
    for (i, &(t, v)) in g.knots().iter().enumerate() {
        let r = v.abs().sqrt();
        theta.w1[i] = r;
        theta.w2[i] = v / r;
        theta.b1[i] = t;
    }
    for i in c..k {
        theta.b1[i] = INACTIVE_BIAS;
    }
    Ok(theta)
}
