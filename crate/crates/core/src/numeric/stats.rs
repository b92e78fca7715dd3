//! Weighted regression, running moments and log-sum-exp.

use crate::error::{Error, Result};

/// Weighted least squares fit `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the regression covariance.
    pub slope_se: f64,
}

/// Fits a line with weights `w_i` (inverse variances). With at least three
/// points the slope error is scaled by the reduced chi-square when that
/// exceeds one, so misfit widens the interval instead of hiding.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::invalid("regression inputs differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::invalid("regression needs at least two points"));
    }
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::Numerical("degenerate regression design".into()));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    let mut var = sw / det;
    if x.len() > 2 {
        let chi2: f64 = x
            .iter()
            .zip(y)
            .zip(w)
            .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
            .sum();
        let red = chi2 / (x.len() - 2) as f64;
        if red > 1.0 {
            var *= red;
        }
    }
    Ok(LineFit { slope, intercept, slope_se: var.sqrt() })
}

/// Ordinary least-squares slope and intercept.
pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    weighted_line_fit(x, y, &vec![1.0; x.len()])
}

/// Running sum, sum of squares and count; mergeable across workers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let m = self.mean();
        ((self.sum_sq - self.n as f64 * m * m) / (self.n - 1) as f64).max(0.0)
    }

    pub fn std_err(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let mut m = Moments::default();
    xs.iter().for_each(|&x| m.push(x));
    (m.mean(), m.std_err())
}

/// Streaming log-sum-exp accumulator that also tracks `Σ e^{2a}` for the
/// delta-method error of `ln mean e^{a}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMeanExp {
    pub n: u64,
    max: f64,
    s1: f64,
    s2: f64,
}

impl Default for LogMeanExp {
    fn default() -> Self {
        Self { n: 0, max: f64::NEG_INFINITY, s1: 0.0, s2: 0.0 }
    }
}

impl LogMeanExp {
    pub fn push(&mut self, a: f64) {
        self.n += 1;
        if a == f64::NEG_INFINITY {
            return;
        }
        if a > self.max {
            let r = (self.max - a).exp();
            self.s1 *= r;
            self.s2 *= r * r;
            self.max = a;
        }
        let e = (a - self.max).exp();
        self.s1 += e;
        self.s2 += e * e;
    }

    pub fn merge(&mut self, o: &LogMeanExp) {
        self.n += o.n;
        if o.max == f64::NEG_INFINITY {
            return;
        }
        if o.max > self.max {
            let r = (self.max - o.max).exp();
            self.s1 = self.s1 * r + o.s1;
            self.s2 = self.s2 * r * r + o.s2;
            self.max = o.max;
        } else {
            let r = (o.max - self.max).exp();
            self.s1 += o.s1 * r;
            self.s2 += o.s2 * r * r;
        }
    }

    /// `ln( (1/n) Σ e^{a_i} )`.
    pub fn log_mean(&self) -> f64 {
        if self.s1 == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.max + self.s1.ln() - (self.n as f64).ln()
    }

    /// Delta-method standard error of `log_mean`.
    pub fn log_mean_se(&self) -> f64 {
        if self.s1 == 0.0 || self.n < 2 {
            return f64::INFINITY;
        }
        let n = self.n as f64;
        let m = self.s1 / n;
        let var = ((self.s2 / n - m * m) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt() / m
    }
}

/// Two-sample Kolmogorov–Smirnov statistic and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("both samples must be nonempty".into()));
    }
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    Ok((d, kolmogorov_sf(lambda)))
}

/// `P[K > λ]` for the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let t = 2.0 * (-1.0f64).powi(j - 1) * (-2.0 * (j as f64 * lambda).powi(2)).exp();
        sum += t;
        if t.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}
