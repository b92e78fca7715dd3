//! Deep ReLU networks and the periodic-target construction.
//!
//! A period-1, reflection-symmetric `g0` satisfies `g0(x − ⌊x⌋) = g̃(T(x))`,
//! where `T(x) = 2·dist(x, ℤ)` is the triangle wave and `g̃(u) = g0(u/2)`.
//! The first hidden layer builds `T` from `2l` ReLUs; the second applies
//! `g̃` as a one-dimensional ReLU expansion of `T`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pwl::{PwlFunction, PWL_TOL};

/// Fully connected network with ReLU hidden layers and identity output.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepNetParams {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl DeepNetParams {
    pub fn new(weights: Vec<DMatrix<f64>>, biases: Vec<DVector<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::invalid("need one bias vector per weight matrix"));
        }
        let mut dims = vec![weights[0].ncols()];
        for (w, b) in weights.iter().zip(&biases) {
            if w.ncols() != *dims.last().expect("nonempty") || w.nrows() != b.len() {
                return Err(Error::invalid("layer shapes do not chain"));
            }
            dims.push(w.nrows());
        }
        if dims[0] != 1 || *dims.last().expect("nonempty") != 1 {
            return Err(Error::invalid("network must map scalars to scalars"));
        }
        Ok(Self { layer_dims: dims, weights, biases })
    }

    pub fn forward(&self, x: f64) -> f64 {
        let mut h = DVector::from_element(1, x);
        let last = self.weights.len() - 1;
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            h = w * h + b;
            if i < last {
                h.apply(|v| *v = v.max(0.0));
            }
        }
        h[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }
}

impl crate::models::Hypothesis for DeepNetParams {
    fn predict(&self, x: f64) -> f64 {
        self.forward(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicDeepNet {
    pub net: DeepNetParams,
    /// Pinned degrees of freedom: a knot location and an effective slope
    /// per hidden ReLU, plus the output offset.
    pub constrained_parameter_count: usize,
}

fn check_symmetric(g0: &PwlFunction) -> Result<()> {
    let mut pts: Vec<f64> = vec![0.0, 0.5, 1.0];
    for &(t, _) in g0.knots() {
        pts.push(t);
        pts.push(1.0 - t);
    }
    let scale = 1.0 + pts.iter().map(|&x| g0.eval_unchecked(x).abs()).fold(0.0, f64::max);
    for x in pts {
        let (a, b) = (g0.eval_unchecked(x), g0.eval_unchecked(1.0 - x));
        if (a - b).abs() > PWL_TOL * scale {
            return Err(Error::UnsupportedTarget(format!(
                "g0 is not reflection-symmetric: g0({x}) = {a}, g0({}) = {b}",
                1.0 - x
            )));
        }
    }
    Ok(())
}

/// Builds a two-hidden-layer network computing `periodize(g0, l)` on `[0, l]`.
pub fn build_periodic_deep_net(g0: &PwlFunction, l: usize) -> Result<PeriodicDeepNet> {
    if g0.domain() != (0.0, 1.0) {
        return Err(Error::domain("g0 must live on [0, 1]"));
    }
    if l == 0 {
        return Err(Error::invalid("number of periods must be positive"));
    }
    check_symmetric(g0)?;

    // Layer 1: [x]_+, [x − n − ½]_+ for n < l, [x − n]_+ for 1 ≤ n < l.
    let mut shifts = vec![0.0];
    let mut t_coeff = vec![2.0];
    for n in 0..l {
        shifts.push(n as f64 + 0.5);
        t_coeff.push(-4.0);
    }
    for n in 1..l {
        shifts.push(n as f64);
        t_coeff.push(4.0);
    }
    let h1 = shifts.len();
    let w1 = DMatrix::from_element(h1, 1, 1.0);
    let b1 = DVector::from_iterator(h1, shifts.iter().map(|s| -s));

    // Layer 2: g̃(u) = g0(u/2) written as Σ c_j [u − s_j]_+ on [0, 1].
    let mut profile: Vec<(f64, f64)> = Vec::new();
    let s0 = g0.initial_slope() / 2.0;
    if s0 != 0.0 {
        profile.push((0.0, s0));
    }
    profile.extend(g0.interior_knots().filter(|k| k.0 < 0.5).map(|&(t, v)| (2.0 * t, v / 2.0)));
    if profile.is_empty() {
        profile.push((0.0, 0.0));
    }
    let h2 = profile.len();
    let w2 = DMatrix::from_fn(h2, h1, |_, j| t_coeff[j]);
    let b2 = DVector::from_iterator(h2, profile.iter().map(|p| -p.0));
    let w3 = DMatrix::from_fn(1, h2, |_, j| profile[j].1);
    let b3 = DVector::from_element(1, g0.bias());

    let net = DeepNetParams::new(vec![w1, w2, w3], vec![b1, b2, b3])?;
    Ok(PeriodicDeepNet { net, constrained_parameter_count: 2 * h1 + 2 * h2 + 1 })
}

/// Pinned-parameter count of the knot-wise shallow realization of `g`,
/// under the same counting rule.
pub fn shallow_constrained_count(g: &PwlFunction) -> usize {
    2 * g.knots().len() + 1
}
