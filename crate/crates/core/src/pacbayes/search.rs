//! Bisection for the temperature `σ_alg²` at which the expected empirical
//! loss of the Gibbs posterior equals `(1 + β)σ_e²`.

use rayon::prelude::*;

use super::conjugate::{conjugate_empirical_loss, conjugate_posterior_linear};
use super::sgld::{run_sgld, Differentiable, SgldConfig};
use super::{empirical_loss_of_q, generate_dataset, Dataset, LossSpec};
use crate::complexity::LinearFamily;
use crate::error::{Error, Result};
use crate::models::Hypothesis;
use crate::pwl::L2Measure;
use crate::rng::SeededRng;

/// Search interval for `σ_y²`, bisected on a log scale.
pub const SIGMA_Y_SQ_RANGE: (f64, f64) = (1e-6, 1e6);
const MAX_BISECTIONS: usize = 60;

/// `L_S(Q(σ_y²))` for one dataset.
pub trait GibbsLoss: Sync {
    fn empirical_loss(&self, s: &Dataset, sigma_y_sq: f64, rng: &SeededRng) -> Result<f64>;
}

/// Exact losses of the Gaussian posterior of a linear model.
#[derive(Debug, Clone)]
pub struct ConjugateGibbs {
    pub family: LinearFamily,
    pub spec: LossSpec,
}

impl GibbsLoss for ConjugateGibbs {
    fn empirical_loss(&self, s: &Dataset, sigma_y_sq: f64, _rng: &SeededRng) -> Result<f64> {
        let q = conjugate_posterior_linear(s, &self.family, sigma_y_sq)?;
        conjugate_empirical_loss(&q, &self.family.basis, s, self.spec)
    }
}

/// SGLD estimates. `cfg.sigma_y_sq` is the reference temperature: below it
/// the step size shrinks in proportion to keep the chain stable.
#[derive(Debug, Clone)]
pub struct SgldGibbs<F> {
    pub family: F,
    pub cfg: SgldConfig,
    pub spec: LossSpec,
}

impl<F: Differentiable> GibbsLoss for SgldGibbs<F> {
    fn empirical_loss(&self, s: &Dataset, sigma_y_sq: f64, rng: &SeededRng) -> Result<f64> {
        let eta = self.cfg.eta * (sigma_y_sq / self.cfg.sigma_y_sq).min(1.0);
        let cfg = SgldConfig { eta, sigma_y_sq, ..self.cfg.clone() };
        let chain = run_sgld(s, &self.family, &cfg, rng)?;
        if chain.draws.is_empty() {
            return Err(Error::invalid("the chain kept no draws"));
        }
        Ok(empirical_loss_of_q(&self.family, &chain.draws, s, self.spec)?.mean)
    }
}

/// How the held-out dataset replicas are drawn.
#[derive(Debug, Clone, Copy)]
pub struct DatasetDesign<'a, G: ?Sized> {
    pub target: &'a G,
    pub n: usize,
    pub sigma_e_sq: f64,
    pub measure: L2Measure,
    pub replicas: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaAlg {
    pub sigma_y_sq: f64,
    /// Replica average of `L_S(Q)` at `sigma_y_sq`.
    pub loss: f64,
    pub target_loss: f64,
    /// Replica averages at the two ends of the search interval.
    pub bracket_losses: (f64, f64),
    pub iterations: usize,
    pub converged: bool,
}

/// Bisects `ln σ_y²` over [`SIGMA_Y_SQ_RANGE`] until the replica average of
/// `L_S(Q(σ_y²))` is within `tol` of `(1 + β)σ_e²`. Replica `r` draws its
/// data from `rng.substream(2r)` and feeds `rng.substream(2r + 1)` to the
/// oracle at every temperature.
pub fn find_sigma_alg<G, L>(
    beta: f64,
    design: &DatasetDesign<'_, G>,
    oracle: &L,
    tol: f64,
    rng: &SeededRng,
) -> Result<SigmaAlg>
where
    G: Hypothesis + Sync + ?Sized,
    L: GibbsLoss,
{
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::domain(format!("beta = {beta} outside (0, 1]")));
    }
    if !(tol > 0.0) || design.replicas == 0 {
        return Err(Error::invalid("need tol > 0 and at least one replica"));
    }
    let data: Vec<Dataset> = (0..design.replicas)
        .map(|r| generate_dataset(design.target, design.n, design.sigma_e_sq, design.measure, &rng.substream(2 * r as u64)))
        .collect::<Result<_>>()?;
    let avg = |sigma_y_sq: f64| -> Result<f64> {
        let losses: Vec<f64> = data
            .par_iter()
            .enumerate()
            .map(|(r, s)| oracle.empirical_loss(s, sigma_y_sq, &rng.substream(2 * r as u64 + 1)))
            .collect::<Result<_>>()?;
        Ok(losses.iter().sum::<f64>() / losses.len() as f64)
    };
    let target = (1.0 + beta) * design.sigma_e_sq;
    let (lo_s, hi_s) = SIGMA_Y_SQ_RANGE;
    let bracket = (avg(lo_s)?, avg(hi_s)?);
    if !(bracket.0 < target && target < bracket.1) {
        return Err(Error::AssumptionViolated(format!(
            "E[L_S] is {} at σ_y² = {lo_s:e} and {} at σ_y² = {hi_s:e}; the target {target} is not bracketed",
            bracket.0, bracket.1
        )));
    }
    let (mut lo, mut hi) = (lo_s.ln(), hi_s.ln());
    let mut best = SigmaAlg {
        sigma_y_sq: f64::NAN,
        loss: f64::NAN,
        target_loss: target,
        bracket_losses: bracket,
        iterations: 0,
        converged: false,
    };
    for it in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let loss = avg(mid.exp())?;
        if best.loss.is_nan() || (loss - target).abs() < (best.loss - target).abs() {
            best.sigma_y_sq = mid.exp();
            best.loss = loss;
        }
        best.iterations = it;
        if (loss - target).abs() <= tol {
            best.sigma_y_sq = mid.exp();
            best.loss = loss;
            best.converged = true;
            break;
        }
        if loss < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}
