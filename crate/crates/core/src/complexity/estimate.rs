//! Result records shared by the complexity estimators.

use crate::error::{Error, Result};
use crate::numeric::stats::weighted_line_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    NaiveMC,
    ImportanceSampling,
    ClosedFormQ,
    LogSumExpMC,
    /// Closed-form Gaussian integral.
    ExactGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateFlag {
    Ok,
    /// No sample landed in the event; `chi` is infinite and
    /// `chi_lower_bound` holds the rule-of-three bound `−ln(3/n)`.
    ZeroHits,
    /// The event has probability zero.
    Impossible,
}

/// A negative log-probability in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityEstimate {
    pub chi: f64,
    pub log_prob: f64,
    /// Delta-method standard error of `chi`.
    pub std_err: f64,
    pub n_samples: u64,
    pub n_hits: u64,
    pub epsilon_sq: f64,
    pub method: Method,
    pub flag: EstimateFlag,
    pub chi_lower_bound: f64,
}

impl ComplexityEstimate {
    /// From an unbiased probability estimate and its standard error.
    pub fn from_probability(
        p: f64,
        p_se: f64,
        n_samples: u64,
        n_hits: u64,
        epsilon_sq: f64,
        method: Method,
    ) -> Self {
        if n_hits == 0 || p <= 0.0 {
            return Self::zero_hits(n_samples, epsilon_sq, method);
        }
        Self::from_log_prob(p.ln(), p_se / p, n_samples, n_hits, epsilon_sq, method)
    }

    pub fn from_log_prob(
        log_prob: f64,
        std_err: f64,
        n_samples: u64,
        n_hits: u64,
        epsilon_sq: f64,
        method: Method,
    ) -> Self {
        let chi = -log_prob;
        Self {
            chi,
            log_prob,
            std_err,
            n_samples,
            n_hits,
            epsilon_sq,
            method,
            flag: EstimateFlag::Ok,
            chi_lower_bound: chi,
        }
    }

    pub fn zero_hits(n_samples: u64, epsilon_sq: f64, method: Method) -> Self {
        Self {
            chi: f64::INFINITY,
            log_prob: f64::NEG_INFINITY,
            std_err: f64::INFINITY,
            n_samples,
            n_hits: 0,
            epsilon_sq,
            method,
            flag: EstimateFlag::ZeroHits,
            chi_lower_bound: -(3.0 / n_samples.max(1) as f64).ln(),
        }
    }

    pub fn impossible(n_samples: u64, epsilon_sq: f64, method: Method) -> Self {
        Self {
            chi: f64::INFINITY,
            log_prob: f64::NEG_INFINITY,
            std_err: 0.0,
            n_samples,
            n_hits: 0,
            epsilon_sq,
            method,
            flag: EstimateFlag::Impossible,
            chi_lower_bound: f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.flag == EstimateFlag::Ok
    }
}

/// Slope of `ln P` against `ln ε` over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub eps_grid: Vec<f64>,
    pub per_eps: Vec<ComplexityEstimate>,
    /// Half-width of a 95% interval on the slope.
    pub ci_halfwidth: f64,
}

pub const DEFAULT_EPS_GRID: [f64; 6] = [0.3, 0.2, 0.14, 0.1, 0.07, 0.05];

pub(crate) fn check_eps_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.len() < 3 {
        return Err(Error::invalid("slope fits need at least three grid points"));
    }
    if eps_grid.iter().any(|e| !(*e > 0.0)) || eps_grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::invalid("eps grid must be positive and strictly decreasing"));
    }
    Ok(())
}

/// Weighted fit of `log_prob` against `ln ε` with weights `1/std_err²`.
/// Every grid point must carry a finite estimate.
pub fn fit_slope(eps_grid: &[f64], per_eps: Vec<ComplexityEstimate>) -> Result<SlopeEstimate> {
    check_eps_grid(eps_grid)?;
    if let Some((e, _)) = eps_grid.iter().zip(&per_eps).find(|(_, c)| !c.is_finite()) {
        return Err(Error::InsufficientSamples(format!("no hits at eps = {e}")));
    }
    let x: Vec<f64> = eps_grid.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = per_eps.iter().map(|c| c.log_prob).collect();
    let w: Vec<f64> = per_eps.iter().map(|c| 1.0 / c.std_err.max(1e-12).powi(2)).collect();
    let fit = weighted_line_fit(&x, &y, &w)?;
    Ok(SlopeEstimate {
        slope: fit.slope,
        intercept: fit.intercept,
        eps_grid: eps_grid.to_vec(),
        per_eps,
        ci_halfwidth: 1.96 * fit.slope_se,
    })
}
