//! Model families viewed as a flat parameter vector with an independent
//! per-coordinate prior, a squared L2 distance to a target, and a set of
//! windows around exact representations of the target.

use crate::error::{Error, Result};
use crate::models::linear::eval_linear_unchecked;
use crate::models::{BasisSpec, LinearTarget};
use crate::priors::{CoordPrior, LinearPriorSpec, NnPriorSpec};
use crate::pwl::{mean_sq_raw, PwlFunction};

/// A region of parameter space: a box (infinite bounds leave a coordinate
/// free) further cut by product bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub bounds: Vec<(f64, f64)>,
    pub bands: Vec<ProductBand>,
}

/// `θ_i·θ_j ∈ [lo, hi]`. The box must keep `θ_i` away from zero; `θ_j` is
/// drawn after `θ_i` from its prior restricted to the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBand {
    pub i: usize,
    pub j: usize,
    pub lo: f64,
    pub hi: f64,
}

impl ProductBand {
    /// Interval of `θ_j` allowed once `θ_i = x` is fixed.
    pub fn slice(&self, x: f64) -> (f64, f64) {
        let (a, b) = (self.lo / x, self.hi / x);
        (a.min(b), a.max(b))
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        let p = theta[self.i] * theta[self.j];
        self.lo <= p && p <= self.hi
    }
}

impl Window {
    pub fn boxed(bounds: Vec<(f64, f64)>) -> Self {
        Self { bounds, bands: Vec::new() }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.bounds.iter().zip(theta).all(|(&(a, b), &x)| a <= x && x <= b) && self.bands.iter().all(|b| b.contains(theta))
    }
}

pub trait Family: Sync {
    type Target: Sync + ?Sized;

    fn dim(&self) -> usize;

    /// Independent prior factors, one per flat coordinate.
    fn coordinates(&self) -> Vec<CoordPrior>;

    /// `E_x[(g(x) − f_θ(x))²]`.
    fn dist_sq(&self, theta: &[f64], g: &Self::Target) -> f64;

    /// `f_θ(x)`.
    fn predict(&self, theta: &[f64], x: f64) -> f64;

    /// Boxes of per-coordinate half-width `h` around the exact
    /// representations of `g` that the importance sampler should visit.
    fn windows(&self, g: &Self::Target, h: f64) -> Result<Vec<Window>>;

    /// True when no parameter can come within `eps_sq` of `g`.
    fn infeasible(&self, _g: &Self::Target, _eps_sq: f64) -> bool {
        false
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.coordinates().iter().zip(theta).map(|(c, &x)| c.log_density(x)).sum()
    }
}

/// Orthonormal Legendre model on `[−1, 1]` with an isotropic Gaussian prior.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFamily {
    pub basis: BasisSpec,
    pub prior: LinearPriorSpec,
}

impl LinearFamily {
    pub fn new(d: usize, sigma_w_sq: f64) -> Result<Self> {
        Ok(Self { basis: BasisSpec::legendre(d)?, prior: LinearPriorSpec::new(sigma_w_sq)? })
    }

    pub fn d(&self) -> usize {
        self.basis.d
    }
}

impl Family for LinearFamily {
    type Target = LinearTarget;

    fn dim(&self) -> usize {
        self.basis.d
    }

    fn coordinates(&self) -> Vec<CoordPrior> {
        self.prior.coordinates(self.basis.d)
    }

    fn dist_sq(&self, theta: &[f64], g: &LinearTarget) -> f64 {
        g.distance_sq(theta)
    }

    fn predict(&self, theta: &[f64], x: f64) -> f64 {
        eval_linear_unchecked(theta, &self.basis, x)
    }

    fn windows(&self, g: &LinearTarget, h: f64) -> Result<Vec<Window>> {
        if g.coeffs.len() != self.basis.d {
            return Err(Error::invalid("target and model dimensions differ"));
        }
        Ok(vec![Window::boxed(g.coeffs.iter().map(|&c| (c - h, c + h)).collect())])
    }

    fn infeasible(&self, g: &LinearTarget, eps_sq: f64) -> bool {
        g.perp_sq >= eps_sq
    }
}

/// Shallow ReLU networks with `k` nodes under the product parametrization,
/// flat layout `[w1, w2, b1, b2]`, inputs uniform on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShallowFamily {
    pub k: usize,
    pub prior: NnPriorSpec,
}

impl ShallowFamily {
    pub fn new(k: usize, prior: NnPriorSpec) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("network needs at least one node"));
        }
        Ok(Self { k, prior })
    }
}

/// All injective maps from `c` items into `k` slots.
pub(crate) fn injections(c: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(c);
    fn rec(c: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == c {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            if !cur.contains(&i) {
                cur.push(i);
                rec(c, k, cur, out);
                cur.pop();
            }
        }
    }
    if c <= k {
        rec(c, k, &mut cur, &mut out);
    }
    out
}

const MAX_WINDOWS: usize = 4096;

impl Family for ShallowFamily {
    type Target = PwlFunction;

    fn dim(&self) -> usize {
        3 * self.k + 1
    }

    fn coordinates(&self) -> Vec<CoordPrior> {
        self.prior.coordinates(self.k)
    }

    fn dist_sq(&self, theta: &[f64], g: &PwlFunction) -> f64 {
        let k = self.k;
        let mut knots: Vec<(f64, f64)> = Vec::with_capacity(k + g.knots().len());
        for i in 0..k {
            knots.push((theta[2 * k + i], theta[i] * theta[k + i]));
        }
        knots.extend(g.knots().iter().map(|&(t, v)| (t, -v)));
        mean_sq_raw(0.0, 1.0, theta[3 * k] - g.bias(), &mut knots)
    }

    fn predict(&self, theta: &[f64], x: f64) -> f64 {
        let k = self.k;
        theta[3 * k] + (0..k).map(|i| theta[i] * theta[k + i] * (x - theta[2 * k + i]).max(0.0)).sum::<f64>()
    }

    /// One window per knot-to-node assignment and sign choice. Assigned
    /// nodes sit near the knot with `w1` of the chosen sign and the product
    /// `w1·w2` in a band around the slope change; the rest are parked beyond
    /// the domain (or muted through `w2` when the bias range leaves no room
    /// past 1).
    fn windows(&self, g: &PwlFunction, h: f64) -> Result<Vec<Window>> {
        if g.domain() != (0.0, 1.0) {
            return Err(Error::domain("shallow targets live on [0, 1]"));
        }
        let (k, c, m) = (self.k, g.knots().len(), self.prior.m);
        if c > k {
            return Err(Error::invalid(format!("{c} knots exceed the node budget {k}")));
        }
        let maps = injections(c, k);
        if maps.len() << c > MAX_WINDOWS {
            return Err(Error::invalid("too many knot assignments for the importance sampler"));
        }
        let free = (f64::NEG_INFINITY, f64::INFINITY);
        let park_by_bias = m - 1.0 >= 0.5;
        let mut out = Vec::with_capacity(maps.len() << c);
        for map in &maps {
            for signs in 0..(1usize << c) {
                let mut w = Window::boxed(vec![free; 3 * k + 1]);
                for i in 0..k {
                    if park_by_bias {
                        w.bounds[2 * k + i] = ((1.0 - h).max(0.0), m);
                    } else {
                        w.bounds[k + i] = (-h, h);
                        w.bounds[2 * k + i] = (0.0, m);
                    }
                }
                for (j, &(t, v)) in g.knots().iter().enumerate() {
                    let i = map[j];
                    let r = v.abs().sqrt();
                    w.bounds[i] = if signs >> j & 1 == 1 { (-4.0 * r, -0.25 * r) } else { (0.25 * r, 4.0 * r) };
                    w.bounds[k + i] = free;
                    w.bounds[2 * k + i] = ((t - h).max(0.0), (t + h).min(m));
                    // a slope error δ costs δ²(1 − t)³/3 in squared distance
                    let delta = h * (3.0 / (1.0 - t).max(h).powi(3)).sqrt();
                    w.bands.push(ProductBand { i, j: k + i, lo: v - delta, hi: v + delta });
                }
                w.bounds[3 * k] = (g.bias() - h, g.bias() + h);
                out.push(w);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{min_norm_realization, shallow_to_pwl, ShallowNetParams};
    use crate::pwl::{l2_distance_sq, L2Measure};

    #[test]
    fn shallow_distance_matches_pwl_path() {
        let fam = ShallowFamily::new(2, NnPriorSpec::default_for(2)).unwrap();
        let theta = ShallowNetParams::new(vec![0.5, -1.2], vec![1.5, 0.3], vec![0.2, 1.4], 0.1).unwrap();
        let g = PwlFunction::canonicalize(&[(0.5, 1.0)], -0.2).unwrap();
        let a = fam.dist_sq(&theta.to_flat(), &g);
        let b = l2_distance_sq(&shallow_to_pwl(&theta), &g, L2Measure::UniformUnit).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!((fam.predict(&theta.to_flat(), 0.7) - theta.forward(0.7)).abs() < 1e-15);
    }

    #[test]
    fn windows_contain_min_norm_realization() {
        let fam = ShallowFamily::new(3, NnPriorSpec::default_for(3)).unwrap();
        let g = PwlFunction::canonicalize(&[(0.3, -2.0), (0.6, 1.0)], 0.4).unwrap();
        let ws = fam.windows(&g, 0.01).unwrap();
        assert_eq!(ws.len(), 6 * 4);
        let mut theta = min_norm_realization(&g, 3).unwrap();
        theta.b1[2] = 1.5;
        assert!(ws.iter().any(|w| w.contains(&theta.to_flat())));
        // sliding along the hyperbola stays inside some window
        theta.w1[0] *= 2.0;
        theta.w2[0] /= 2.0;
        assert!(ws.iter().any(|w| w.contains(&theta.to_flat())));
    }

    #[test]
    fn injection_counts() {
        assert_eq!(injections(2, 3).len(), 6);
        assert_eq!(injections(0, 4), vec![Vec::<usize>::new()]);
        assert!(injections(3, 2).is_empty());
    }

    #[test]
    fn linear_infeasible_when_perp_too_large() {
        let fam = LinearFamily::new(2, 1.0).unwrap();
        let g = LinearTarget { coeffs: vec![1.0, 0.0], perp_sq: 0.2 };
        assert!(fam.infeasible(&g, 0.1));
        assert!(!fam.infeasible(&g, 0.3));
    }
}
