//! The Gibbs posterior of a linear model under its Gaussian prior, which is
//! Gaussian, with exact clipped losses, KL divergences and empirical
//! complexities.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Dataset, LossSpec};
use crate::complexity::{ComplexityEstimate, LinearFamily, Method};
use crate::error::{Error, Result};
use crate::models::{BasisSpec, Hypothesis};
use crate::numeric::quad::integrate;
use crate::numeric::special::{normal_cdf, normal_pdf, normal_sf};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    chol: DMatrix<f64>,
}

fn factor(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

impl GaussianPosterior {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.shape() != (d, d) {
            return Err(Error::invalid("covariance shape differs from the mean"));
        }
        let scale = covariance.amax().max(f64::MIN_POSITIVE);
        if (&covariance - covariance.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Numerical("covariance is not symmetric".into()));
        }
        let chol = factor(&covariance, "covariance")?.l();
        Ok(Self { mean, covariance, chol })
    }

    /// `N(0, σ_w² I)`.
    pub fn prior(d: usize, sigma_w_sq: f64) -> Self {
        let cov = DMatrix::identity(d, d) * sigma_w_sq;
        Self { mean: DVector::zeros(d), chol: DMatrix::identity(d, d) * sigma_w_sq.sqrt(), covariance: cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.mean + &self.chol * z).as_slice().to_vec()
    }

    fn log_det(&self) -> f64 {
        2.0 * self.chol.diagonal().iter().map(|x| x.ln()).sum::<f64>()
    }

    /// Mean and variance of `⟨φ, w⟩` under the posterior.
    fn project(&self, phi: &DVector<f64>) -> (f64, f64) {
        (self.mean.dot(phi), (&self.covariance * phi).dot(phi).max(0.0))
    }
}

fn design(s: &Dataset, basis: &BasisSpec) -> DMatrix<f64> {
    let mut phi = DMatrix::zeros(s.len(), basis.d);
    let mut row = vec![0.0; basis.d];
    for (n, &x) in s.xs.iter().enumerate() {
        basis.values_into(x, &mut row);
        for (j, &v) in row.iter().enumerate() {
            phi[(n, j)] = v;
        }
    }
    phi
}

/// The Gibbs posterior `∝ P(w)·exp(−Σ(y_n − ⟨φ(x_n), w⟩)²/(2σ_y²))`: covariance
/// `(ΦᵀΦ/σ_y² + I/σ_w²)⁻¹` and mean `Σ_post Φᵀy/σ_y²`.
pub fn conjugate_posterior_linear(s: &Dataset, family: &LinearFamily, sigma_y_sq: f64) -> Result<GaussianPosterior> {
    if !(sigma_y_sq > 0.0) {
        return Err(Error::domain("sigma_y_sq must be positive"));
    }
    let (precision, rhs) = normal_equations(s, family, sigma_y_sq)?;
    let chol = factor(&precision, "posterior precision")?;
    let mean = chol.solve(&rhs);
    let cov = chol.inverse();
    let cov = (&cov + cov.transpose()) * 0.5;
    GaussianPosterior::new(mean, cov)
}

fn normal_equations(s: &Dataset, family: &LinearFamily, sigma_y_sq: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let phi = design(s, &family.basis);
    if phi.iter().any(|v| !v.is_finite()) || s.ys.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("design matrix or responses are not finite".into()));
    }
    let d = family.d();
    let y = DVector::from_column_slice(&s.ys);
    let precision = phi.transpose() * &phi / sigma_y_sq + DMatrix::identity(d, d) / family.prior.sigma_w_sq;
    Ok((precision, phi.transpose() * y / sigma_y_sq))
}

/// `D(q‖p)` between Gaussians.
pub fn kl_gaussians(q: &GaussianPosterior, p: &GaussianPosterior) -> Result<f64> {
    let d = q.dim();
    if p.dim() != d {
        return Err(Error::invalid("dimensions differ"));
    }
    let pc = factor(&p.covariance, "covariance of p")?;
    let trace = pc.solve(&q.covariance).trace();
    let dm = &p.mean - &q.mean;
    let maha = dm.dot(&pc.solve(&dm));
    let kl = 0.5 * (trace + maha - d as f64 + p.log_det() - q.log_det());
    Ok(kl.max(0.0))
}

/// `E[min(Z², C)]` for `Z ~ N(m, v)`.
pub fn clipped_gaussian_sq(m: f64, v: f64, clip_c: f64) -> f64 {
    if v <= 0.0 {
        return (m * m).min(clip_c);
    }
    let (s, r) = (v.sqrt(), clip_c.sqrt());
    let (a, b) = ((-r - m) / s, (r - m) / s);
    let inside = (normal_cdf(b) - normal_cdf(a)).max(0.0);
    let (pa, pb) = (normal_pdf(a), normal_pdf(b));
    let core = m * m * inside + 2.0 * m * s * (pa - pb) + v * (inside - (b * pb - a * pa));
    (core + clip_c * (normal_cdf(a) + normal_sf(b))).clamp(0.0, clip_c)
}

/// Exact `L_S(Q)` for a Gaussian posterior over linear coefficients.
pub fn conjugate_empirical_loss(q: &GaussianPosterior, basis: &BasisSpec, s: &Dataset, spec: LossSpec) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::invalid("the empirical loss needs at least one sample"));
    }
    let mut phi = DVector::zeros(basis.d);
    let mut total = 0.0;
    for (&x, &y) in s.xs.iter().zip(&s.ys) {
        basis.values_into(x, phi.as_mut_slice());
        let (mu, var) = q.project(&phi);
        total += clipped_gaussian_sq(y - mu, var, spec.clip_c);
    }
    Ok(total / s.len() as f64)
}

/// Exact `L_D(Q)` for inputs uniform on `[-1, 1]` and `y = g(x) + N(0, σ_e²)`.
pub fn conjugate_true_loss<G: Hypothesis + ?Sized>(
    q: &GaussianPosterior,
    basis: &BasisSpec,
    g: &G,
    sigma_e_sq: f64,
    spec: LossSpec,
) -> Result<f64> {
    if !(sigma_e_sq >= 0.0) {
        return Err(Error::domain("noise variance must be non-negative"));
    }
    let f = |x: f64| {
        let phi = DVector::from_vec(basis.values(x));
        let (mu, var) = q.project(&phi);
        clipped_gaussian_sq(g.predict(x) - mu, var + sigma_e_sq, spec.clip_c)
    };
    Ok(0.5 * integrate(f, -1.0, 1.0, 1e-13, 1e-11)?)
}

/// Exact `χ^E = −ln E_P exp(−Σ_n (y_n − f_w(x_n))²/(2·t·N))` at temperature `t`.
pub fn empirical_complexity_linear_exact(s: &Dataset, family: &LinearFamily, t: f64) -> Result<ComplexityEstimate> {
    if !(t > 0.0) {
        return Err(Error::domain("temperature must be positive"));
    }
    if s.is_empty() {
        return Err(Error::invalid("the empirical complexity needs at least one sample"));
    }
    let s2 = t * s.len() as f64;
    let (precision, rhs) = normal_equations(s, family, s2)?;
    let chol = factor(&precision, "posterior precision")?;
    let log_det = family.d() as f64 * family.prior.sigma_w_sq.ln()
        + 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let yy: f64 = s.ys.iter().map(|y| y * y).sum();
    let chi = yy / (2.0 * s2) + 0.5 * log_det - 0.5 * rhs.dot(&chol.solve(&rhs));
    Ok(ComplexityEstimate::from_log_prob(-chi, 0.0, 0, 0, f64::NAN, Method::ExactGaussian))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::empirical_complexity_mc;
    use crate::models::linear::LinearHypothesis;
    use crate::pacbayes::generate_dataset;
    use crate::pwl::L2Measure;
    use crate::rng::SeededRng;

    fn setup(n: usize, seed: u64) -> (LinearFamily, LinearHypothesis, Dataset) {
        let fam = LinearFamily::new(3, 1.0).unwrap();
        let g = LinearHypothesis { basis: fam.basis, w: vec![0.5, -0.3, 0.2] };
        let s = generate_dataset(&g, n, 0.01, L2Measure::UniformSym, &SeededRng::new(seed, 0)).unwrap();
        (fam, g, s)
    }

    #[test]
    fn no_data_gives_prior() {
        let fam = LinearFamily::new(2, 0.5).unwrap();
        let s = Dataset::empty(L2Measure::UniformSym, SeededRng::new(0, 0));
        let q = conjugate_posterior_linear(&s, &fam, 1.0).unwrap();
        assert_eq!(q.mean, DVector::zeros(2));
        assert!((q.covariance.clone() - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
    }

    #[test]
    fn vanishing_likelihood_gives_prior() {
        let (fam, _, s) = setup(30, 1);
        let q = conjugate_posterior_linear(&s, &fam, 1e12).unwrap();
        assert!(q.mean.amax() < 1e-6);
        assert!((q.covariance.clone() - DMatrix::identity(3, 3)).amax() < 1e-6);
    }

    #[test]
    fn scalar_update() {
        // d = 1: φ ≡ 1/√2, precision φ²/σ_y² + 1/σ_w², mean (φy/σ_y²)/precision
        let fam = LinearFamily::new(1, 2.0).unwrap();
        let s = Dataset { xs: vec![0.3], ys: vec![1.2], ..Dataset::empty(L2Measure::UniformSym, SeededRng::new(0, 0)) };
        let q = conjugate_posterior_linear(&s, &fam, 0.25).unwrap();
        let prec = 0.5 / 0.25 + 0.5;
        assert!((q.covariance[(0, 0)] - 1.0 / prec).abs() < 1e-15);
        assert!((q.mean[0] - 0.5f64.sqrt() * 1.2 / 0.25 / prec).abs() < 1e-14);
    }

    #[test]
    fn scalar_kl() {
        let q = GaussianPosterior::new(DVector::from_element(1, 1.0), DMatrix::identity(1, 1)).unwrap();
        let p = GaussianPosterior::prior(1, 1.0);
        assert!((kl_gaussians(&q, &p).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(kl_gaussians(&p, &p).unwrap(), 0.0);
        // KL(N(0, 2)‖N(0, 1)) = ½(2 − 1 − ln 2)
        let w = GaussianPosterior::new(DVector::zeros(1), DMatrix::identity(1, 1) * 2.0).unwrap();
        assert!((kl_gaussians(&w, &p).unwrap() - 0.5 * (1.0 - 2f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn non_pd_rejected() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(GaussianPosterior::new(DVector::zeros(2), bad), Err(Error::Numerical(_))));
    }

    #[test]
    fn clipped_expectation_matches_quadrature() {
        for &(m, v, c) in &[(0.0, 1.0, 4.0), (1.3, 0.2, 1.0), (-0.4, 3.0, 2.5), (0.1, 1e-6, 4.0), (2.5, 0.5, 4.0)] {
            let s = f64::sqrt(v);
            let f = |z: f64| (m + s * z).powi(2).min(c) * normal_pdf(z);
            let want = integrate(f, -12.0, 12.0, 1e-14, 1e-12).unwrap();
            assert!((clipped_gaussian_sq(m, v, c) - want).abs() < 1e-10, "{m} {v} {c}");
        }
        assert_eq!(clipped_gaussian_sq(3.0, 0.0, 4.0), 4.0);
        // no clipping in effect: m² + v
        assert!((clipped_gaussian_sq(0.5, 0.1, 1e6) - 0.35).abs() < 1e-12);
    }

    #[test]
    fn exact_losses_match_sampling() {
        let (fam, g, s) = setup(50, 2);
        let q = conjugate_posterior_linear(&s, &fam, 0.5).unwrap();
        let spec = LossSpec::new(0.3).unwrap();
        let mut gen = SeededRng::new(3, 0).generator();
        let draws: Vec<Vec<f64>> = (0..4000).map(|_| q.sample(&mut gen)).collect();
        let ls = super::super::empirical_loss_of_q(&fam, &draws, &s, spec).unwrap();
        let exact = conjugate_empirical_loss(&q, &fam.basis, &s, spec).unwrap();
        assert!((ls.mean - exact).abs() < 4.0 * ls.std_err, "{ls:?} vs {exact}");
        let ld = super::super::true_loss_of_q(&fam, &draws, &g, 0.01, L2Measure::UniformSym, spec, 200, &SeededRng::new(4, 0))
            .unwrap();
        let exact = conjugate_true_loss(&q, &fam.basis, &g, 0.01, spec).unwrap();
        assert!((ld.mean - exact).abs() < 4.0 * ld.std_err, "{ld:?} vs {exact}");
    }

    #[test]
    fn exact_empirical_complexity_matches_mc() {
        let (fam, g, s) = setup(20, 5);
        let t = 0.05;
        let exact = empirical_complexity_linear_exact(&s, &fam, t).unwrap();
        let mc = empirical_complexity_mc(&fam, &g, &s.xs, &s.noise, t, 400_000, &SeededRng::new(6, 0)).unwrap();
        assert!((exact.chi - mc.chi).abs() < 4.0 * mc.std_err, "{} vs {} ± {}", exact.chi, mc.chi, mc.std_err);
    }

    // D(Q‖P) = χ^E − N·E_Q[unclipped L_S]/(2σ_y²); clipping only loosens the bound.
    #[test]
    fn divergence_bound_dominates_kl() {
        let prior = GaussianPosterior::prior(3, 1.0);
        let sigma_y_sq = 0.02;
        for seed in 0..20 {
            let (fam, _, s) = setup(100, 100 + seed);
            let n = s.len();
            let q = conjugate_posterior_linear(&s, &fam, sigma_y_sq).unwrap();
            let kl = kl_gaussians(&q, &prior).unwrap();
            let chi = empirical_complexity_linear_exact(&s, &fam, sigma_y_sq / n as f64).unwrap();
            let loose = conjugate_empirical_loss(&q, &fam.basis, &s, LossSpec::default()).unwrap();
            let tight = conjugate_empirical_loss(&q, &fam.basis, &s, LossSpec::new(1e9).unwrap()).unwrap();
            let b_loose = super::super::divergence_upper_bound(&chi, n, sigma_y_sq, loose).unwrap();
            let b_tight = super::super::divergence_upper_bound(&chi, n, sigma_y_sq, tight).unwrap();
            assert!(b_loose >= kl - 1e-9);
            assert!((b_tight - kl).abs() < 1e-8 * kl.max(1.0), "{b_tight} vs {kl}");
        }
    }
}
