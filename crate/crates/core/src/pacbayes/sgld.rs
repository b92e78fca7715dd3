//! Stochastic gradient Langevin dynamics on the Gibbs posterior
//! `∝ P(θ)·exp(−Σ(y_n − f_θ(x_n))²/(2σ_y²))`, with full-sample gradients.

use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::complexity::{Family, LinearFamily, ShallowFamily};
use crate::error::{Error, Result};
use crate::priors::CoordPrior;
use crate::rng::SeededRng;

/// Parameter norm beyond which a chain is declared divergent.
const DIVERGENCE_NORM: f64 = 1e6;

/// Families whose predictions can be differentiated in the parameters.
pub trait Differentiable: Family {
    /// Returns `f_θ(x)` and writes `∇_θ f_θ(x)` into `grad`.
    fn predict_grad(&self, theta: &[f64], x: f64, grad: &mut [f64]) -> f64;
}

impl Differentiable for LinearFamily {
    fn predict_grad(&self, theta: &[f64], x: f64, grad: &mut [f64]) -> f64 {
        self.basis.values_into(x, grad);
        grad.iter().zip(theta).map(|(b, w)| b * w).sum()
    }
}

impl Differentiable for ShallowFamily {
    fn predict_grad(&self, theta: &[f64], x: f64, grad: &mut [f64]) -> f64 {
        let k = self.k;
        let mut out = theta[3 * k];
        for i in 0..k {
            let (w1, w2) = (theta[i], theta[k + i]);
            let r = (x - theta[2 * k + i]).max(0.0);
            grad[i] = w2 * r;
            grad[k + i] = w1 * r;
            grad[2 * k + i] = if r > 0.0 { -w1 * w2 } else { 0.0 };
            out += w1 * w2 * r;
        }
        grad[3 * k] = 1.0;
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgldConfig {
    pub eta: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub sigma_y_sq: f64,
    /// With `false` the chain is plain gradient descent to the MAP.
    pub noise: bool,
    /// Starting point; a prior draw when absent.
    pub init: Option<Vec<f64>>,
}

impl SgldConfig {
    pub fn new(eta: f64, steps: usize, burn_in: usize, thin: usize, sigma_y_sq: f64) -> Result<Self> {
        let cfg = Self { eta, steps, burn_in, thin, sigma_y_sq, noise: true, init: None };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::invalid("step size must be positive"));
        }
        if !(self.sigma_y_sq > 0.0) {
            return Err(Error::domain("sigma_y_sq must be positive"));
        }
        if self.thin == 0 || self.burn_in > self.steps {
            return Err(Error::invalid("need thin ≥ 1 and burn_in ≤ steps"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgldChain {
    pub draws: Vec<Vec<f64>>,
    pub last: Vec<f64>,
}

/// Folds `x` back into `[lo, hi]` by reflection.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    let y = (x - lo).rem_euclid(2.0 * w);
    lo + if y > w { 2.0 * w - y } else { y }
}

/// `θ ← θ − η∇U(θ) + √(2η/N)·ξ` with
/// `U = (1/N)[Σ_n (y_n − f_θ(x_n))²/(2σ_y²) − ln P(θ)]`, reflected at the edges
/// of uniform prior factors. An empty dataset samples the prior with `N = 1`.
pub fn run_sgld<F: Differentiable>(s: &Dataset, family: &F, cfg: &SgldConfig, rng: &SeededRng) -> Result<SgldChain> {
    cfg.validate()?;
    let dim = family.dim();
    let coords = family.coordinates();
    let mut gen = rng.generator();
    let mut theta = match &cfg.init {
        Some(t) if t.len() != dim => return Err(Error::invalid("initial point has the wrong dimension")),
        Some(t) => t.clone(),
        None => coords.iter().map(|c| c.sample(&mut gen)).collect(),
    };
    let n = s.len().max(1) as f64;
    let noise_sd = (2.0 * cfg.eta / n).sqrt();
    let mut grad = vec![0.0; dim];
    let mut df = vec![0.0; dim];
    let mut draws = Vec::with_capacity((cfg.steps - cfg.burn_in) / cfg.thin);
    for step in 1..=cfg.steps {
        for (g, (c, &x)) in grad.iter_mut().zip(coords.iter().zip(&theta)) {
            *g = match *c {
                CoordPrior::Normal { sd } => x / (sd * sd) / n,
                CoordPrior::Uniform { .. } => 0.0,
            };
        }
        let scale = 1.0 / (cfg.sigma_y_sq * n);
        for (&x, &y) in s.xs.iter().zip(&s.ys) {
            let r = family.predict_grad(&theta, x, &mut df) - y;
            grad.iter_mut().zip(&df).for_each(|(g, d)| *g += scale * r * d);
        }
        for (i, t) in theta.iter_mut().enumerate() {
            *t -= cfg.eta * grad[i];
            if cfg.noise {
                *t += noise_sd * gen.sample::<f64, _>(StandardNormal);
            }
            if let CoordPrior::Uniform { lo, hi } = coords[i] {
                *t = reflect(*t, lo, hi);
            }
        }
        let norm = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Numerical(format!(
                "SGLD diverged at step {step}: ‖θ‖ = {norm:.3e} with η = {}, σ_y² = {}",
                cfg.eta, cfg.sigma_y_sq
            )));
        }
        if step > cfg.burn_in && (step - cfg.burn_in) % cfg.thin == 0 {
            draws.push(theta.clone());
        }
    }
    Ok(SgldChain { draws, last: theta })
}
