//! Parameter priors: Gaussian weights, uniform hidden biases and a Gaussian
//! output bias for shallow networks; isotropic Gaussian for linear models.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::models::{LinearModelParams, ShallowNetParams};
use crate::numeric::special::{normal_cdf, normal_interval_mass, normal_log_density, normal_quantile, normal_sf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnPriorSpec {
    pub sigma_w_sq: f64,
    /// Hidden biases are uniform on `[0, m]`.
    pub m: f64,
    pub sigma_b_sq: f64,
}

impl NnPriorSpec {
    pub fn new(sigma_w_sq: f64, m: f64, sigma_b_sq: f64) -> Result<Self> {
        if !(sigma_w_sq > 0.0 && sigma_b_sq > 0.0) || !sigma_w_sq.is_finite() || !sigma_b_sq.is_finite() {
            return Err(Error::invalid("prior variances must be positive and finite"));
        }
        if !(m >= 1.0) || !m.is_finite() {
            return Err(Error::invalid("bias range M must be at least 1"));
        }
        Ok(Self { sigma_w_sq, m, sigma_b_sq })
    }

    /// `M = k`, `σ_w² = 1/k`, `σ_b² = 1`.
    pub fn default_for(k: usize) -> Self {
        let k = k.max(1) as f64;
        Self { sigma_w_sq: 1.0 / k, m: k, sigma_b_sq: 1.0 }
    }

    /// Independent per-coordinate laws in the flat layout `[w1, w2, b1, b2]`.
    pub fn coordinates(&self, k: usize) -> Vec<CoordPrior> {
        let w = CoordPrior::Normal { sd: self.sigma_w_sq.sqrt() };
        let mut c = vec![w; 2 * k];
        c.extend(std::iter::repeat(CoordPrior::Uniform { lo: 0.0, hi: self.m }).take(k));
        c.push(CoordPrior::Normal { sd: self.sigma_b_sq.sqrt() });
        c
    }

    /// `E‖θ‖²` under the prior.
    pub fn expected_norm_sq(&self, k: usize) -> f64 {
        let k = k as f64;
        2.0 * k * self.sigma_w_sq + k * self.m * self.m / 3.0 + self.sigma_b_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPriorSpec {
    pub sigma_w_sq: f64,
}

impl LinearPriorSpec {
    pub fn new(sigma_w_sq: f64) -> Result<Self> {
        if !(sigma_w_sq > 0.0) || !sigma_w_sq.is_finite() {
            return Err(Error::invalid("prior variance must be positive and finite"));
        }
        Ok(Self { sigma_w_sq })
    }

    pub fn coordinates(&self, d: usize) -> Vec<CoordPrior> {
        vec![CoordPrior::Normal { sd: self.sigma_w_sq.sqrt() }; d]
    }
}

/// A one-dimensional prior factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordPrior {
    Normal { sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl CoordPrior {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CoordPrior::Normal { sd } => sd * rng.sample::<f64, _>(StandardNormal),
            CoordPrior::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            CoordPrior::Normal { sd } => normal_log_density(x, sd * sd),
            CoordPrior::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Support clipped to `[a, b]`, or `None` when the overlap is empty.
    pub fn clip(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let (lo, hi) = match *self {
            CoordPrior::Normal { .. } => (a, b),
            CoordPrior::Uniform { lo, hi } => (a.max(lo), b.min(hi)),
        };
        (lo < hi).then_some((lo, hi))
    }

    /// Prior probability of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        match *self {
            CoordPrior::Normal { sd } => normal_interval_mass(a / sd, b / sd),
            CoordPrior::Uniform { lo, hi } => ((b.min(hi) - a.max(lo)) / (hi - lo)).max(0.0),
        }
    }

    /// Draw from the prior conditioned on `[a, b]`, which must carry mass.
    pub fn sample_truncated<R: Rng + ?Sized>(&self, a: f64, b: f64, rng: &mut R) -> f64 {
        match *self {
            CoordPrior::Normal { sd } => {
                let (za, zb) = (a / sd, b / sd);
                let u: f64 = rng.gen();
                let z = if za >= 0.0 {
                    // upper tail: invert the survival function
                    let (sa, sb) = (normal_sf(za), normal_sf(zb));
                    -normal_quantile(sa - u * (sa - sb))
                } else {
                    let (ca, cb) = (normal_cdf(za), normal_cdf(zb));
                    normal_quantile(ca + u * (cb - ca))
                };
                (sd * z).clamp(a, b)
            }
            CoordPrior::Uniform { lo, hi } => {
                let (a, b) = (a.max(lo), b.min(hi));
                a + (b - a) * rng.gen::<f64>()
            }
        }
    }
}

pub fn sample_nn_prior<R: Rng + ?Sized>(spec: &NnPriorSpec, k: usize, rng: &mut R) -> Result<ShallowNetParams> {
    if k == 0 {
        return Err(Error::invalid("network needs at least one node"));
    }
    let sw = spec.sigma_w_sq.sqrt();
    let mut theta = ShallowNetParams::zeros(k);
    for i in 0..k {
        theta.w1[i] = sw * rng.sample::<f64, _>(StandardNormal);
    }
    for i in 0..k {
        theta.w2[i] = sw * rng.sample::<f64, _>(StandardNormal);
    }
    for i in 0..k {
        theta.b1[i] = spec.m * rng.gen::<f64>();
    }
    theta.b2 = spec.sigma_b_sq.sqrt() * rng.sample::<f64, _>(StandardNormal);
    Ok(theta)
}

/// Log prior density; `-∞` when a hidden bias leaves `[0, M]`.
pub fn log_nn_prior_density(theta: &ShallowNetParams, spec: &NnPriorSpec) -> f64 {
    if theta.b1.iter().any(|b| !(0.0..=spec.m).contains(b)) {
        return f64::NEG_INFINITY;
    }
    let w: f64 = theta.w1.iter().chain(&theta.w2).map(|&w| normal_log_density(w, spec.sigma_w_sq)).sum();
    w + normal_log_density(theta.b2, spec.sigma_b_sq) - theta.k() as f64 * spec.m.ln()
}

pub fn sample_linear_prior<R: Rng + ?Sized>(spec: &LinearPriorSpec, d: usize, rng: &mut R) -> Result<LinearModelParams> {
    if d == 0 {
        return Err(Error::invalid("linear model needs at least one coefficient"));
    }
    let sw = spec.sigma_w_sq.sqrt();
    Ok(LinearModelParams::new((0..d).map(|_| sw * rng.sample::<f64, _>(StandardNormal)).collect()))
}

pub fn log_linear_prior_density(p: &LinearModelParams, spec: &LinearPriorSpec) -> f64 {
    p.w.iter().map(|&w| normal_log_density(w, spec.sigma_w_sq)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::stats::Moments;
    use crate::rng::SeededRng;

    #[test]
    fn spec_validation() {
        assert!(NnPriorSpec::new(0.0, 1.0, 1.0).is_err());
        assert!(NnPriorSpec::new(1.0, 0.5, 1.0).is_err());
        assert!(LinearPriorSpec::new(0.0).is_err());
        let d = NnPriorSpec::default_for(8);
        assert_eq!((d.sigma_w_sq, d.m, d.sigma_b_sq), (0.125, 8.0, 1.0));
    }

    #[test]
    fn nn_prior_moments() {
        let spec = NnPriorSpec::new(0.5, 3.0, 1.0).unwrap();
        let mut rng = SeededRng::new(11, 0).generator();
        let (mut w1, mut b1) = (Moments::default(), Moments::default());
        for _ in 0..1_000_000 {
            let t = sample_nn_prior(&spec, 1, &mut rng).unwrap();
            w1.push(t.w1[0]);
            b1.push(t.b1[0]);
        }
        assert!((w1.variance() / 0.5 - 1.0).abs() < 0.01);
        assert!((b1.mean() - 1.5).abs() < 3.0 * b1.std_err());
    }

    #[test]
    fn nn_log_density_examples() {
        let spec = NnPriorSpec::new(1.0, 1.0, 1.0).unwrap();
        let t = ShallowNetParams::zeros(1);
        assert!((log_nn_prior_density(&t, &spec) + 2.756_815_599_614_018).abs() < 1e-12);
        let mut out = t.clone();
        out.b1[0] = 1.1;
        assert_eq!(log_nn_prior_density(&out, &spec), f64::NEG_INFINITY);
    }

    #[test]
    fn nn_density_integrates_to_one() {
        // k = 1: integrate over w1, w2, b2 on a grid with b1 integrated exactly
        let spec = NnPriorSpec::new(0.7, 2.0, 0.5).unwrap();
        let h = 0.1;
        let grid: Vec<f64> = (-60..=60).map(|i| i as f64 * h).collect();
        let mut total = 0.0;
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    let t = ShallowNetParams::new(vec![a], vec![b], vec![1.0], c).unwrap();
                    total += log_nn_prior_density(&t, &spec).exp() * h * h * h * spec.m;
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn linear_prior_moments_and_determinism() {
        let spec = LinearPriorSpec::new(2.0).unwrap();
        let mut rng = SeededRng::new(5, 1).generator();
        let n = 1_000_000;
        let mut cov = [[0.0; 3]; 3];
        let mut norm = Moments::default();
        for _ in 0..n {
            let w = sample_linear_prior(&spec, 3, &mut rng).unwrap().w;
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += w[i] * w[j] / n as f64;
                }
            }
            norm.push(w.iter().map(|x| x * x).sum());
        }
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((cov[i][j] - want).abs() < 0.02 * 2.0, "cov[{i}][{j}] = {}", cov[i][j]);
            }
        }
        assert!((norm.mean() / 6.0 - 1.0).abs() < 0.01);

        let a = sample_linear_prior(&spec, 4, &mut SeededRng::new(9, 2).generator()).unwrap();
        let b = sample_linear_prior(&spec, 4, &mut SeededRng::new(9, 2).generator()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn streams_uncorrelated() {
        let n = 1_000_000;
        let mut a = SeededRng::new(3, 0).generator();
        let mut b = SeededRng::new(3, 1).generator();
        let c = CoordPrior::Normal { sd: 1.0 };
        let mut sxy = 0.0;
        let (mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let (x, y) = (c.sample(&mut a), c.sample(&mut b));
            sxy += x * y;
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
        }
        let nf = n as f64;
        let rho = (sxy / nf - sx * sy / nf / nf) / ((sxx / nf - (sx / nf).powi(2)) * (syy / nf - (sy / nf).powi(2))).sqrt();
        assert!(rho.abs() < 4.0 / nf.sqrt(), "rho = {rho}");
    }

    #[test]
    fn kde_of_output_bias_matches_density() {
        let spec = NnPriorSpec::new(1.0, 1.0, 0.6).unwrap();
        let mut rng = SeededRng::new(21, 0).generator();
        let xs: Vec<f64> = (0..200_000).map(|_| sample_nn_prior(&spec, 1, &mut rng).unwrap().b2).collect();
        let h = 0.05;
        for &x0 in &[-1.5, -0.7, 0.0, 0.4, 1.2] {
            let kde = xs.iter().filter(|&&x| (x - x0).abs() <= h).count() as f64 / (xs.len() as f64 * 2.0 * h);
            let dens = normal_log_density(x0, spec.sigma_b_sq).exp();
            if dens > 0.01 {
                assert!((kde / dens - 1.0).abs() < 0.05, "x0 = {x0}: {kde} vs {dens}");
            }
        }
    }

    #[test]
    fn truncated_normal_stays_inside_and_has_right_mean() {
        let c = CoordPrior::Normal { sd: 0.5 };
        let mut rng = SeededRng::new(1, 0).generator();
        let mut m = Moments::default();
        for _ in 0..200_000 {
            let x = c.sample_truncated(1.0, 1.3, &mut rng);
            assert!((1.0..=1.3).contains(&x));
            m.push(x);
        }
        // numerical mean of the truncated law
        let num = crate::numeric::quad::integrate(|x| x * normal_log_density(x, 0.25).exp(), 1.0, 1.3, 1e-14, 1e-12).unwrap();
        let want = num / c.mass(1.0, 1.3);
        assert!((m.mean() - want).abs() < 4.0 * m.std_err());
    }
}
