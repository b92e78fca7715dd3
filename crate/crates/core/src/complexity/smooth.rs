//! Exponentially weighted complexities: the exponential complexity χ, the
//! true complexity with noise χ^N and the empirical complexity χ^E.

use super::estimate::{ComplexityEstimate, Method};
use super::family::Family;
use super::sharp::sample_prior;
use crate::error::{Error, Result};
use crate::models::{Hypothesis, LinearTarget};
use crate::numeric::stats::LogMeanExp;
use crate::rng::{par_chunks, SeededRng};

fn log_mean_exp_over_prior<F, A>(family: &F, n: u64, rng: &SeededRng, exponent: A) -> LogMeanExp
where
    F: Family,
    A: Fn(&[f64]) -> f64 + Sync,
{
    let coords = family.coordinates();
    let parts = par_chunks(rng, n, |m, gen| {
        let mut theta = vec![0.0; family.dim()];
        let mut acc = LogMeanExp::default();
        for _ in 0..m {
            sample_prior(&coords, gen, &mut theta);
            acc.push(exponent(&theta));
        }
        acc
    });
    let mut acc = LogMeanExp::default();
    parts.iter().for_each(|p| acc.merge(p));
    acc
}

fn to_estimate(acc: &LogMeanExp, n: u64) -> ComplexityEstimate {
    let lp = acc.log_mean();
    if lp == f64::NEG_INFINITY {
        return ComplexityEstimate::zero_hits(n, f64::NAN, Method::LogSumExpMC);
    }
    ComplexityEstimate::from_log_prob(lp, acc.log_mean_se(), n, n, f64::NAN, Method::LogSumExpMC)
}

fn check_temp(sigma_y_sq: f64, n: u64) -> Result<()> {
    if !(sigma_y_sq > 0.0) {
        return Err(Error::domain("sigma_y_sq must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    Ok(())
}

/// `χ(g, σ_y²) = −ln E_θ exp(−E_x(g − f_θ)²/(2σ_y²))`.
pub fn exponential_complexity_mc<F: Family>(
    family: &F,
    g: &F::Target,
    sigma_y_sq: f64,
    n: u64,
    rng: &SeededRng,
) -> Result<ComplexityEstimate> {
    check_temp(sigma_y_sq, n)?;
    let acc = log_mean_exp_over_prior(family, n, rng, |t| -family.dist_sq(t, g) / (2.0 * sigma_y_sq));
    Ok(to_estimate(&acc, n))
}

/// `χ^N(g, σ_y², σ_e²)`, using `E_η(g + η − f)² = (g − f)² + σ_e²`. On the
/// same stream it equals the exponential complexity plus `σ_e²/(2σ_y²)`.
pub fn true_complexity_with_noise_mc<F: Family>(
    family: &F,
    g: &F::Target,
    sigma_y_sq: f64,
    sigma_e_sq: f64,
    n: u64,
    rng: &SeededRng,
) -> Result<ComplexityEstimate> {
    check_temp(sigma_y_sq, n)?;
    if !(sigma_e_sq >= 0.0) {
        return Err(Error::domain("noise variance must be non-negative"));
    }
    let acc =
        log_mean_exp_over_prior(family, n, rng, |t| -(family.dist_sq(t, g) + sigma_e_sq) / (2.0 * sigma_y_sq));
    Ok(to_estimate(&acc, n))
}

/// `χ^E(g, S_x, S_η, σ_y²) = −ln E_θ exp(−Σ_n (g(x_n) + η_n − f_θ(x_n))²/(2σ_y²N))`.
pub fn empirical_complexity_mc<F: Family, G: Hypothesis + Sync + ?Sized>(
    family: &F,
    g: &G,
    xs: &[f64],
    noise: &[f64],
    sigma_y_sq: f64,
    n: u64,
    rng: &SeededRng,
) -> Result<ComplexityEstimate> {
    check_temp(sigma_y_sq, n)?;
    if xs.len() != noise.len() {
        return Err(Error::invalid("inputs and noise draws differ in length"));
    }
    if xs.is_empty() {
        return Err(Error::invalid("empirical complexity needs at least one sample"));
    }
    let ys: Vec<f64> = xs.iter().zip(noise).map(|(&x, &e)| g.predict(x) + e).collect();
    let scale = 1.0 / (2.0 * sigma_y_sq * xs.len() as f64);
    let acc = log_mean_exp_over_prior(family, n, rng, |t| {
        -scale * xs.iter().zip(&ys).map(|(&x, &y)| (y - family.predict(t, x)).powi(2)).sum::<f64>()
    });
    Ok(to_estimate(&acc, n))
}

/// Exact exponential complexity of a linear target under `N(0, σ_w²I)`:
/// each coordinate contributes a Gaussian integral.
pub fn exponential_complexity_linear_exact(g: &LinearTarget, sigma_w_sq: f64, sigma_y_sq: f64) -> Result<f64> {
    if !(sigma_w_sq > 0.0 && sigma_y_sq > 0.0) {
        return Err(Error::domain("variances must be positive"));
    }
    // exp(−½(w − m)²/(2σ_y²)) is a Gaussian kernel of variance s = 2σ_y²
    let s = 2.0 * sigma_y_sq;
    let t = s + sigma_w_sq;
    let per: f64 = g.coeffs.iter().map(|m| 0.5 * (t / s).ln() + m * m / (2.0 * t)).sum();
    Ok(per + g.perp_sq / (2.0 * sigma_y_sq))
}

/// Both sides of `E_X ln E_Y e^{−f} ≥ ln E_Y e^{−E_X f}` for finite discrete
/// `X` and `Y` with probabilities `px`, `py` and values `f[i][j] = f(x_i, y_j)`.
pub fn megaineq_sides(px: &[f64], py: &[f64], f: &[Vec<f64>]) -> Result<(f64, f64)> {
    if f.len() != px.len() || f.iter().any(|r| r.len() != py.len()) {
        return Err(Error::invalid("value table does not match the supports"));
    }
    let log_e_y = |vals: &dyn Fn(usize) -> f64| -> f64 {
        let mut acc = f64::NEG_INFINITY;
        for (j, &p) in py.iter().enumerate() {
            if p > 0.0 {
                let a = p.ln() - vals(j);
                acc = if acc == f64::NEG_INFINITY { a } else { acc.max(a) + (-(acc - a).abs()).exp().ln_1p() };
            }
        }
        acc
    };
    let lhs: f64 = px.iter().zip(f).map(|(&p, row)| p * log_e_y(&|j| row[j])).sum();
    let rhs = log_e_y(&|j| px.iter().zip(f).map(|(&p, row)| p * row[j]).sum());
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::family::{LinearFamily, ShallowFamily};
    use crate::priors::NnPriorSpec;
    use crate::pwl::PwlFunction;
    use proptest::prelude::*;

    #[test]
    fn vanishing_penalty_gives_zero() {
        let fam = ShallowFamily::new(2, NnPriorSpec::default_for(2)).unwrap();
        let g = PwlFunction::canonicalize(&[(0.5, 1.0)], 0.0).unwrap();
        let e = exponential_complexity_mc(&fam, &g, 1e12, 2000, &SeededRng::new(1, 0)).unwrap();
        assert!(e.chi.abs() < 1e-9);
    }

    #[test]
    fn linear_matches_gaussian_integral() {
        let fam = LinearFamily::new(3, 0.7).unwrap();
        let g = LinearTarget { coeffs: vec![0.6, -0.3, 0.1], perp_sq: 0.01 };
        let e = exponential_complexity_mc(&fam, &g, 0.05, 200_000, &SeededRng::new(2, 0)).unwrap();
        let exact = exponential_complexity_linear_exact(&g, 0.7, 0.05).unwrap();
        assert!((e.chi - exact).abs() < 3.0 * e.std_err, "{} vs {exact} ± {}", e.chi, e.std_err);
    }

    #[test]
    fn noise_chain_identity_on_shared_draws() {
        let fam = ShallowFamily::new(2, NnPriorSpec::default_for(2)).unwrap();
        let g = PwlFunction::canonicalize(&[(0.3, -0.8)], 0.4).unwrap();
        let rng = SeededRng::new(3, 0);
        let chi = exponential_complexity_mc(&fam, &g, 0.02, 5000, &rng).unwrap();
        let chin = true_complexity_with_noise_mc(&fam, &g, 0.02, 0.01, 5000, &rng).unwrap();
        assert!((chi.chi + 0.01 / 0.04 - chin.chi).abs() < 1e-10);
    }

    #[test]
    fn empirical_rejects_bad_lengths() {
        let fam = LinearFamily::new(2, 1.0).unwrap();
        let g = |x: f64| x;
        let r = SeededRng::new(4, 0);
        assert!(empirical_complexity_mc(&fam, &g, &[0.1], &[], 1.0, 10, &r).is_err());
        assert!(empirical_complexity_mc(&fam, &g, &[], &[], 1.0, 10, &r).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn megaineq_holds(
            nx in 1usize..5, ny in 1usize..5,
            raw in proptest::collection::vec(0.0f64..5.0, 16),
            wx in proptest::collection::vec(0.01f64..1.0, 4),
            wy in proptest::collection::vec(0.01f64..1.0, 4),
        ) {
            let sx: f64 = wx[..nx].iter().sum();
            let sy: f64 = wy[..ny].iter().sum();
            let px: Vec<f64> = wx[..nx].iter().map(|w| w / sx).collect();
            let py: Vec<f64> = wy[..ny].iter().map(|w| w / sy).collect();
            let f: Vec<Vec<f64>> = (0..nx).map(|i| (0..ny).map(|j| raw[4 * i + j]).collect()).collect();
            let (lhs, rhs) = megaineq_sides(&px, &py, &f).unwrap();
            prop_assert!(lhs >= rhs - 1e-12);
        }
    }
}
