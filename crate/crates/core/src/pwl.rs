//! Continuous piecewise-linear functions `b + Σ v_i [x − t_i]_+` on a
//! bounded interval, with exact L2 distances under the uniform law.

use crate::error::{Error, Result};

/// Absolute tolerance for canonical-form equality.
pub const PWL_TOL: f64 = 1e-12;

/// Uniform input distribution over a bounded interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L2Measure {
    /// Uniform on `[0, 1]`.
    UniformUnit,
    /// Uniform on `[-1, 1]`.
    UniformSym,
}

impl L2Measure {
    pub fn domain(self) -> (f64, f64) {
        match self {
            L2Measure::UniformUnit => (0.0, 1.0),
            L2Measure::UniformSym => (-1.0, 1.0),
        }
    }

    pub fn sample<R: rand::Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let (lo, hi) = self.domain();
        lo + (hi - lo) * rng.gen::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwlFunction {
    domain_lo: f64,
    domain_hi: f64,
    bias: f64,
    knots: Vec<(f64, f64)>,
}

impl PwlFunction {
    /// Builds a canonical function on `[lo, hi]` from an arbitrary knot
    /// multiset. Knots left of `lo` are folded into the bias and a knot at
    /// `lo`; knots at or beyond `hi` never act on the domain and are dropped.
    pub fn new(lo: f64, hi: f64, bias: f64, raw_knots: &[(f64, f64)]) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!("degenerate domain [{lo}, {hi}]")));
        }
        if !bias.is_finite() || raw_knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::invalid("non-finite knot or bias"));
        }
        let mut b = bias;
        let mut ks: Vec<(f64, f64)> = Vec::with_capacity(raw_knots.len());
        for &(t, v) in raw_knots {
            if t >= hi || v == 0.0 {
                continue;
            }
            if t < lo {
                b += v * (lo - t);
                ks.push((lo, v));
            } else {
                ks.push((t, v));
            }
        }
        ks.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(ks.len());
        for (t, v) in ks {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += v,
                _ => merged.push((t, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        Ok(Self { domain_lo: lo, domain_hi: hi, bias: b, knots: merged })
    }

    /// Canonical function on the default domain `[0, 1]`.
    pub fn canonicalize(raw_knots: &[(f64, f64)], bias: f64) -> Result<Self> {
        Self::new(0.0, 1.0, bias, raw_knots)
    }

    pub fn constant(lo: f64, hi: f64, value: f64) -> Result<Self> {
        Self::new(lo, hi, value, &[])
    }

    /// Linear interpolant through `(xs[i], ys[i])`, with `xs` strictly
    /// increasing; the domain is `[xs[0], xs[last]]`.
    pub fn from_breakpoints(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::invalid("need at least two matching breakpoints"));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("breakpoints must be strictly increasing"));
        }
        let mut knots = Vec::with_capacity(xs.len() - 1);
        let mut prev_slope = 0.0;
        for i in 0..xs.len() - 1 {
            let s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            knots.push((xs[i], s - prev_slope));
            prev_slope = s;
        }
        Self::new(xs[0], xs[xs.len() - 1], ys[0], &knots)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.domain_lo, self.domain_hi)
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= self.domain_lo && x <= self.domain_hi) {
            return Err(Error::domain(format!(
                "x = {x} outside [{}, {}]",
                self.domain_lo, self.domain_hi
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the domain check; outside the domain this extends
    /// the representation formula.
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        self.bias + self.knots.iter().map(|&(t, v)| v * (x - t).max(0.0)).sum::<f64>()
    }

    /// Slope of the final segment.
    pub fn final_slope(&self) -> f64 {
        self.knots.iter().map(|k| k.1).sum()
    }

    /// Slope on the first segment (the knot at the left endpoint, if any).
    pub fn initial_slope(&self) -> f64 {
        match self.knots.first() {
            Some(&(t, v)) if t == self.domain_lo => v,
            _ => 0.0,
        }
    }

    /// Interior slope changes, i.e. knots strictly inside the domain.
    pub fn interior_knots(&self) -> impl Iterator<Item = &(f64, f64)> {
        let lo = self.domain_lo;
        self.knots.iter().filter(move |k| k.0 > lo)
    }

    /// Total variation of the derivative, `Σ |v_i|`, counting a knot at the
    /// left endpoint.
    pub fn variational_complexity(&self) -> f64 {
        self.knots.iter().map(|k| k.1.abs()).sum()
    }

    /// `self + sign·other` on a shared domain.
    fn combine(&self, other: &PwlFunction, sign: f64) -> Result<PwlFunction> {
        if self.domain() != other.domain() {
            return Err(Error::domain("functions live on different domains"));
        }
        let mut ks = self.knots.clone();
        ks.extend(other.knots.iter().map(|&(t, v)| (t, sign * v)));
        Self::new(self.domain_lo, self.domain_hi, self.bias + sign * other.bias, &ks)
    }

    pub fn add(&self, other: &PwlFunction) -> Result<PwlFunction> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &PwlFunction) -> Result<PwlFunction> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, c: f64) -> PwlFunction {
        let ks: Vec<_> = self.knots.iter().map(|&(t, v)| (t, c * v)).collect();
        Self::new(self.domain_lo, self.domain_hi, c * self.bias, &ks).expect("scaling keeps validity")
    }

    /// Canonical-form equality with per-field absolute tolerance.
    pub fn approx_eq(&self, other: &PwlFunction, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol;
        let strip = |f: &PwlFunction| -> Vec<(f64, f64)> {
            f.knots.iter().copied().filter(|k| k.1.abs() > tol).collect()
        };
        let (a, b) = (strip(self), strip(other));
        close(self.domain_lo, other.domain_lo)
            && close(self.domain_hi, other.domain_hi)
            && close(self.bias, other.bias)
            && a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| close(x.0, y.0) && close(x.1, y.1))
    }

    /// Largest `|self(x) − other(x)|`, attained at a breakpoint of either.
    pub fn sup_distance(&self, other: &PwlFunction) -> Result<f64> {
        let d = self.sub(other)?;
        let mut pts = vec![d.domain_lo, d.domain_hi];
        pts.extend(d.knots.iter().map(|k| k.0));
        Ok(pts.into_iter().map(|x| d.eval_unchecked(x).abs()).fold(0.0, f64::max))
    }
}

/// `∫ h²` over `[a, b]` for `h` linear with end values `ha`, `hb`.
#[inline]
fn segment_sq_integral(a: f64, b: f64, ha: f64, hb: f64) -> f64 {
    (b - a) * (ha * ha + ha * hb + hb * hb) / 3.0
}

/// Mean of `h²` under the uniform law on `[lo, hi]` for
/// `h(x) = bias + Σ v [x − t]_+`. The knot slice is sorted in place; it
/// may contain duplicates and knots outside the interval.
pub fn mean_sq_raw(lo: f64, hi: f64, bias: f64, knots: &mut [(f64, f64)]) -> f64 {
    knots.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut value = bias;
    let mut slope = 0.0;
    let mut x = lo;
    let mut total = 0.0;
    for &(t, v) in knots.iter() {
        if t <= lo {
            value += v * (lo - t);
            slope += v;
            continue;
        }
        if t >= hi {
            break;
        }
        let next = value + slope * (t - x);
        total += segment_sq_integral(x, t, value, next);
        value = next;
        x = t;
        slope += v;
    }
    let end = value + slope * (hi - x);
    total += segment_sq_integral(x, hi, value, end);
    total / (hi - lo)
}

/// `E_{x~mu}[(f(x) − g(x))²]` in closed form.
pub fn l2_distance_sq(f: &PwlFunction, g: &PwlFunction, mu: L2Measure) -> Result<f64> {
    let dom = mu.domain();
    if f.domain() != dom || g.domain() != dom {
        return Err(Error::domain("function domain does not match the measure"));
    }
    let mut ks: Vec<(f64, f64)> = f.knots.clone();
    ks.extend(g.knots.iter().map(|&(t, v)| (t, -v)));
    Ok(mean_sq_raw(dom.0, dom.1, f.bias - g.bias, &mut ks))
}

pub fn variational_complexity(g: &PwlFunction) -> f64 {
    g.variational_complexity()
}

/// Tiles `g0` on `[0, 1]` into `g(x) = g0(x − ⌊x⌋)` on `[0, l]`.
pub fn periodize(g0: &PwlFunction, l: usize) -> Result<PwlFunction> {
    if g0.domain() != (0.0, 1.0) {
        return Err(Error::domain("periodize expects a function on [0, 1]"));
    }
    if l == 0 {
        return Err(Error::invalid("number of periods must be positive"));
    }
    let (v0, v1) = (g0.eval_unchecked(0.0), g0.eval_unchecked(1.0));
    if (v0 - v1).abs() > PWL_TOL * (1.0 + v0.abs().max(v1.abs())) {
        return Err(Error::Precondition(format!("g0(0) = {v0} differs from g0(1) = {v1}")));
    }
    let jump = g0.initial_slope() - g0.final_slope();
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(l * (g0.knots.len() + 1));
    for n in 0..l {
        let shift = n as f64;
        if n > 0 {
            knots.push((shift, jump));
        }
        knots.extend(g0.interior_knots().map(|&(t, v)| (t + shift, v)));
    }
    knots.push((0.0, g0.initial_slope()));
    PwlFunction::new(0.0, l as f64, g0.bias, &knots)
}
