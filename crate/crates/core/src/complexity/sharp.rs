//! Monte Carlo estimators of the sharp complexity
//! `−ln P_θ[E_x(g − f_θ)² ≤ ε²]` and of its log-log slope.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::estimate::{fit_slope, ComplexityEstimate, EstimateFlag, Method, SlopeEstimate};
use super::family::{Family, Window};
use crate::error::{Error, Result};
use crate::numeric::stats::Moments;
use crate::priors::CoordPrior;
use crate::rng::{par_chunks, SeededRng};

/// Default cloud scale: window half-width is `c·ε`.
pub const DEFAULT_CLOUD_SCALE: f64 = 3.0;

fn check_eps(eps_sq: f64, n: u64) -> Result<()> {
    if !(eps_sq > 0.0) || !eps_sq.is_finite() {
        return Err(Error::domain(format!("eps_sq = {eps_sq} must be positive")));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    Ok(())
}

pub(crate) fn sample_prior(coords: &[CoordPrior], rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for (x, c) in out.iter_mut().zip(coords) {
        *x = c.sample(rng);
    }
}

/// Fraction of prior draws whose distance to `g` is at most `threshold`,
/// with draws taken from the given stream.
fn hit_count<F: Family>(family: &F, g: &F::Target, threshold: f64, n: u64, rng: &SeededRng) -> u64 {
    let coords = family.coordinates();
    par_chunks(rng, n, |m, gen| {
        let mut theta = vec![0.0; family.dim()];
        let mut hits = 0u64;
        for _ in 0..m {
            sample_prior(&coords, gen, &mut theta);
            if family.dist_sq(&theta, g) <= threshold {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum()
}

fn binomial_estimate(hits: u64, n: u64, eps_sq: f64) -> ComplexityEstimate {
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    ComplexityEstimate::from_probability(p, se, n, hits, eps_sq, Method::NaiveMC)
}

/// Plain Monte Carlo over the prior.
pub fn sharp_complexity_mc<F: Family>(
    family: &F,
    g: &F::Target,
    eps_sq: f64,
    n: u64,
    rng: &SeededRng,
) -> Result<ComplexityEstimate> {
    check_eps(eps_sq, n)?;
    if family.infeasible(g, eps_sq) {
        return Ok(ComplexityEstimate::impossible(n, eps_sq, Method::NaiveMC));
    }
    Ok(binomial_estimate(hit_count(family, g, eps_sq, n, rng), n, eps_sq))
}

/// Sharp complexity of the noisy event `E_{x,η}(g + η − f_θ)² ≤ ε²` by
/// plain Monte Carlo; the expectation over `η ~ N(0, σ_e²)` adds `σ_e²`.
pub fn sharp_noisy_mc<F: Family>(
    family: &F,
    g: &F::Target,
    sigma_e_sq: f64,
    eps_sq: f64,
    n: u64,
    rng: &SeededRng,
) -> Result<ComplexityEstimate> {
    check_eps(eps_sq, n)?;
    if eps_sq <= sigma_e_sq {
        return Ok(ComplexityEstimate::impossible(n, eps_sq, Method::NaiveMC));
    }
    let coords = family.coordinates();
    let hits: u64 = par_chunks(rng, n, |m, gen| {
        let mut theta = vec![0.0; family.dim()];
        (0..m)
            .filter(|_| {
                sample_prior(&coords, gen, &mut theta);
                family.dist_sq(&theta, g) + sigma_e_sq <= eps_sq
            })
            .count() as u64
    })
    .into_iter()
    .sum();
    Ok(binomial_estimate(hits, n, eps_sq))
}

/// Evaluates a noiseless sharp-complexity estimator at `ε² − σ_e²`.
pub fn sharp_with_noise<C>(chi_sharp: C, sigma_e_sq: f64, eps_sq: f64) -> Result<ComplexityEstimate>
where
    C: FnOnce(f64) -> Result<ComplexityEstimate>,
{
    if !(sigma_e_sq >= 0.0) {
        return Err(Error::domain("noise variance must be non-negative"));
    }
    if eps_sq <= sigma_e_sq {
        return Ok(ComplexityEstimate::impossible(0, eps_sq, Method::NaiveMC));
    }
    let mut e = chi_sharp(eps_sq - sigma_e_sq)?;
    e.epsilon_sq = eps_sq;
    Ok(e)
}

/// Defensive mixture `½·prior + ½·(uniform mixture of the prior restricted
/// to each window)`. Importance weights are bounded by 2.
pub(crate) struct WindowMixture {
    coords: Vec<CoordPrior>,
    windows: Vec<Window>,
    /// Prior mass of each window's box.
    masses: Vec<f64>,
}

impl WindowMixture {
    pub(crate) fn new(coords: Vec<CoordPrior>, windows: Vec<Window>) -> Result<Self> {
        let mut kept = Vec::with_capacity(windows.len());
        let mut masses = Vec::with_capacity(windows.len());
        for w in windows {
            if w.bounds.len() != coords.len() || w.bands.iter().any(|b| b.i >= coords.len() || b.j >= coords.len()) {
                return Err(Error::Numerical("window dimension mismatch".into()));
            }
            if w.bands.iter().any(|b| w.bounds[b.i].0 < 0.0 && w.bounds[b.i].1 > 0.0) {
                return Err(Error::Numerical("band pivot must keep one sign".into()));
            }
            let m: f64 = coords
                .iter()
                .zip(&w.bounds)
                .enumerate()
                .filter(|(i, _)| !w.bands.iter().any(|b| b.j == *i))
                .map(|(_, (c, &(a, b)))| c.mass(a, b))
                .product();
            if m > 0.0 {
                kept.push(w);
                masses.push(m);
            }
        }
        Ok(Self { coords, windows: kept, masses })
    }

    fn band_slice(&self, w: &Window, band_idx: usize, theta: &[f64]) -> Option<(f64, f64)> {
        let b = &w.bands[band_idx];
        let (lo, hi) = b.slice(theta[b.i]);
        let (a, c) = w.bounds[b.j];
        self.coords[b.j].clip(lo.max(a), hi.min(c))
    }

    pub(crate) fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        if self.windows.is_empty() || rng.gen::<bool>() {
            sample_prior(&self.coords, rng, out);
            return;
        }
        let w = &self.windows[rng.gen_range(0..self.windows.len())];
        for ((x, c), &(a, b)) in out.iter_mut().zip(&self.coords).zip(&w.bounds) {
            *x = if a == f64::NEG_INFINITY && b == f64::INFINITY { c.sample(rng) } else { c.sample_truncated(a, b, rng) };
        }
        for bi in 0..w.bands.len() {
            let j = w.bands[bi].j;
            match self.band_slice(w, bi, out) {
                Some((a, b)) if self.coords[j].mass(a, b) > 0.0 => out[j] = self.coords[j].sample_truncated(a, b, rng),
                // empty slice: leave the box draw, which lies outside the window
                _ => {}
            }
        }
    }

    /// Prior density over proposal density at `theta`, which must lie in
    /// the prior support.
    pub(crate) fn weight(&self, theta: &[f64]) -> f64 {
        if self.windows.is_empty() {
            return 1.0;
        }
        let ratio: f64 = self
            .windows
            .iter()
            .zip(&self.masses)
            .filter(|(w, _)| w.contains(theta))
            .map(|(w, m)| {
                let z: f64 = (0..w.bands.len())
                    .map(|bi| {
                        let j = w.bands[bi].j;
                        self.band_slice(w, bi, theta).map_or(0.0, |(a, b)| self.coords[j].mass(a, b))
                    })
                    .product();
                1.0 / (m * z)
            })
            .sum();
        1.0 / (0.5 + 0.5 * ratio / self.windows.len() as f64)
    }
}

/// Importance-sampling estimate with windows of half-width
/// `cloud_scale·ε` around the exact representations of `g`.
pub fn sharp_complexity_is<F: Family>(
    family: &F,
    g: &F::Target,
    eps_sq: f64,
    n: u64,
    cloud_scale: f64,
    rng: &SeededRng,
) -> Result<ComplexityEstimate> {
    check_eps(eps_sq, n)?;
    if !(cloud_scale > 0.0) {
        return Err(Error::invalid("cloud scale must be positive"));
    }
    if family.infeasible(g, eps_sq) {
        return Ok(ComplexityEstimate::impossible(n, eps_sq, Method::ImportanceSampling));
    }
    let h = cloud_scale * eps_sq.sqrt();
    let mix = WindowMixture::new(family.coordinates(), family.windows(g, h)?)?;
    let parts = par_chunks(rng, n, |m, gen| {
        let mut theta = vec![0.0; family.dim()];
        let mut mom = Moments::default();
        let mut hits = 0u64;
        for _ in 0..m {
            mix.sample_into(gen, &mut theta);
            if family.dist_sq(&theta, g) <= eps_sq {
                hits += 1;
                mom.push(mix.weight(&theta));
            } else {
                mom.push(0.0);
            }
        }
        (mom, hits)
    });
    let mut mom = Moments::default();
    let mut hits = 0;
    for (m, h) in &parts {
        mom.merge(m);
        hits += h;
    }
    Ok(ComplexityEstimate::from_probability(
        mom.mean(),
        mom.std_err(),
        n,
        hits,
        eps_sq,
        Method::ImportanceSampling,
    ))
}

/// Slope of `ln P` against `ln ε` from importance-sampling estimates on
/// each grid point (grid point `i` uses `rng.substream(i)`).
pub fn limiting_complexity<F: Family>(
    family: &F,
    g: &F::Target,
    eps_grid: &[f64],
    n_per_eps: u64,
    cloud_scale: f64,
    rng: &SeededRng,
) -> Result<SlopeEstimate> {
    super::estimate::check_eps_grid(eps_grid)?;
    let mut per = Vec::with_capacity(eps_grid.len());
    for (i, &e) in eps_grid.iter().enumerate() {
        let est = sharp_complexity_is(family, g, e * e, n_per_eps, cloud_scale, &rng.substream(i as u64))?;
        if est.flag != EstimateFlag::Ok {
            return Err(Error::InsufficientSamples(format!("no hits at eps = {e}")));
        }
        per.push(est);
    }
    fit_slope(eps_grid, per)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::family::{LinearFamily, ShallowFamily};
    use crate::complexity::qfunc::linear_sharp_closed_form;
    use crate::models::LinearTarget;
    use crate::priors::NnPriorSpec;
    use crate::pwl::PwlFunction;

    fn joint_z(a: &ComplexityEstimate, b: &ComplexityEstimate) -> f64 {
        (a.chi - b.chi).abs() / (a.std_err.powi(2) + b.std_err.powi(2)).sqrt()
    }

    #[test]
    fn linear_mc_matches_closed_form() {
        let fam = LinearFamily::new(3, 1.0).unwrap();
        let g = LinearTarget::realizable(vec![1.0, 0.0, 0.0]);
        let mc = sharp_complexity_mc(&fam, &g, 0.09, 400_000, &SeededRng::new(1, 0)).unwrap();
        let exact = linear_sharp_closed_form(&g, 1.0, 0.09).unwrap();
        assert!((mc.chi - exact.chi).abs() < 3.0 * mc.std_err, "{mc:?} vs {exact:?}");
    }

    #[test]
    fn nn_huge_eps_has_zero_complexity() {
        let fam = ShallowFamily::new(2, NnPriorSpec::default_for(2)).unwrap();
        let g = PwlFunction::canonicalize(&[], 0.0).unwrap();
        let e = sharp_complexity_mc(&fam, &g, 1e6, 10_000, &SeededRng::new(2, 0)).unwrap();
        assert_eq!(e.n_hits, 10_000);
        assert_eq!(e.chi, 0.0);
    }

    #[test]
    fn unrealizable_linear_target_is_flagged() {
        let fam = LinearFamily::new(3, 1.0).unwrap();
        let g = LinearTarget { coeffs: vec![1.0, 0.0, 0.0], perp_sq: 0.5 };
        let e = sharp_complexity_mc(&fam, &g, 0.1, 1000, &SeededRng::new(3, 0)).unwrap();
        assert_eq!(e.flag, EstimateFlag::Impossible);
        assert!(e.chi.is_infinite());
    }

    #[test]
    fn importance_sampling_agrees_with_mc() {
        let fam = ShallowFamily::new(1, NnPriorSpec::default_for(1)).unwrap();
        let g = PwlFunction::canonicalize(&[(0.4, 1.0)], 0.2).unwrap();
        let rng = SeededRng::new(4, 0);
        let mc = sharp_complexity_mc(&fam, &g, 0.01, 400_000, &rng.substream(0)).unwrap();
        let is = sharp_complexity_is(&fam, &g, 0.01, 400_000, 3.0, &rng.substream(1)).unwrap();
        assert!(mc.n_hits >= 100 && is.n_hits >= 100);
        assert!(joint_z(&mc, &is) < 3.0, "{mc:?} vs {is:?}");
        assert!(is.std_err < mc.std_err, "{mc:?} vs {is:?}");
    }

    #[test]
    fn huge_cloud_recovers_naive_variance() {
        let fam = LinearFamily::new(2, 1.0).unwrap();
        let g = LinearTarget::realizable(vec![0.5, 0.0]);
        let rng = SeededRng::new(5, 0);
        let mc = sharp_complexity_mc(&fam, &g, 0.1, 200_000, &rng.substream(0)).unwrap();
        let is = sharp_complexity_is(&fam, &g, 0.1, 200_000, 1e6, &rng.substream(1)).unwrap();
        let ratio = is.std_err / mc.std_err;
        assert!((ratio - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn zero_target_is_matches_mc() {
        let fam = ShallowFamily::new(2, NnPriorSpec::default_for(2)).unwrap();
        let g = PwlFunction::canonicalize(&[], 0.0).unwrap();
        let rng = SeededRng::new(6, 0);
        let mc = sharp_complexity_mc(&fam, &g, 0.05, 200_000, &rng.substream(0)).unwrap();
        let is = sharp_complexity_is(&fam, &g, 0.05, 200_000, 3.0, &rng.substream(1)).unwrap();
        assert!(joint_z(&mc, &is) < 3.0, "{mc:?} vs {is:?}");
    }

    #[test]
    fn noise_shift_identity() {
        let fam = LinearFamily::new(2, 1.0).unwrap();
        let g = LinearTarget::realizable(vec![0.3, -0.2]);
        let rng = SeededRng::new(7, 0);
        let direct = sharp_noisy_mc(&fam, &g, 0.02, 0.1, 200_000, &rng.substream(0)).unwrap();
        let shifted =
            sharp_with_noise(|e| sharp_complexity_mc(&fam, &g, e, 200_000, &rng.substream(1)), 0.02, 0.1).unwrap();
        assert!(joint_z(&direct, &shifted) < 3.0);
        let same = sharp_with_noise(|e| sharp_complexity_mc(&fam, &g, e, 1000, &rng), 0.0, 0.1).unwrap();
        assert_eq!(same, sharp_complexity_mc(&fam, &g, 0.1, 1000, &rng).unwrap());
        let b = sharp_with_noise(|e| sharp_complexity_mc(&fam, &g, e, 10, &rng), 0.1, 0.1).unwrap();
        assert_eq!(b.flag, EstimateFlag::Impossible);
    }

    #[test]
    fn linear_limiting_slope_is_dimension() {
        for d in [2usize, 3] {
            let fam = LinearFamily::new(d, 1.0).unwrap();
            let mut c = vec![0.0; d];
            c[0] = 0.8;
            let g = LinearTarget::realizable(c);
            let s = limiting_complexity(&fam, &g, &[0.3, 0.2, 0.14, 0.1, 0.07, 0.05], 40_000, 3.0, &SeededRng::new(8, d as u64))
                .unwrap();
            assert!((s.slope - d as f64).abs() < 0.1 * d as f64, "d={d}: {s:?}");
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let fam = ShallowFamily::new(1, NnPriorSpec::default_for(1)).unwrap();
        let g = PwlFunction::canonicalize(&[(0.5, 1.0)], 0.0).unwrap();
        let a = sharp_complexity_is(&fam, &g, 0.01, 5000, 3.0, &SeededRng::new(9, 0)).unwrap();
        let b = sharp_complexity_is(&fam, &g, 0.01, 5000, 3.0, &SeededRng::new(9, 0)).unwrap();
        assert_eq!(a, b);
    }
}
