//! Codimension of the exact-representation set `A_g` of a piecewise-linear
//! target inside the shallow-network parameter space.
//!
//! For each ε the volume of `{θ ∈ B_R ∩ supp P : dist(θ, A_g) ≤ ε}` is
//! estimated and the codimension is read off as the slope of the log
//! volume fraction against `ln ε`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use super::estimate::{check_eps_grid, fit_slope, ComplexityEstimate, Method, SlopeEstimate};
use super::family::injections;
use crate::error::{Error, Result};
use crate::models::ShallowNetParams;
use crate::numeric::roots::real_roots;
use crate::numeric::stats::Moments;
use crate::priors::NnPriorSpec;
use crate::pwl::PwlFunction;
use crate::rng::{par_chunks, SeededRng};

/// Euclidean distance from `(p, q)` to the hyperbola `xy = v` (the union of
/// the axes when `v = 0`).
pub fn hyperbola_distance(p: f64, q: f64, v: f64) -> f64 {
    if v == 0.0 {
        return p.abs().min(q.abs());
    }
    // stationarity of (x − p)² + (v/x − q)², multiplied through by x³
    let roots = real_roots(&[-v * v, q * v, 0.0, -p, 1.0]);
    roots
        .into_iter()
        .filter(|x| *x != 0.0)
        .map(|x| (x - p).powi(2) + (v / x - q).powi(2))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Squared distance of a node to the set where it is silent on `[0, 1]`.
fn inactive_dist_sq(w1: f64, w2: f64, b1: f64) -> f64 {
    (1.0 - b1).max(0.0).powi(2).min(w1 * w1).min(w2 * w2)
}

/// Distance from `θ` to the exact representations of `g` that use one node
/// per knot and silence the rest, minimized over knot-to-node assignments.
/// This is the exact distance to `A_g` when `k = c` (and for `c = 0`,
/// `k = 1`); with one surplus node it is an upper bound.
pub fn dist_to_representation_set(theta: &ShallowNetParams, g: &PwlFunction) -> Result<f64> {
    let (k, c) = (theta.k(), g.knots().len());
    if c > k {
        return Err(Error::invalid(format!("{c} knots exceed the node budget {k}")));
    }
    if k > c + 1 {
        return Err(Error::UnsupportedTarget(format!("distance oracle needs k ≤ c + 1, got k = {k}, c = {c}")));
    }
    Ok(assignment_dist_sq(&theta.w1, &theta.w2, &theta.b1, theta.b2, g).sqrt())
}

fn assignment_dist_sq(w1: &[f64], w2: &[f64], b1: &[f64], b2: f64, g: &PwlFunction) -> f64 {
    let k = w1.len();
    let knots = g.knots();
    let inactive: Vec<f64> = (0..k).map(|i| inactive_dist_sq(w1[i], w2[i], b1[i])).collect();
    let total_inactive: f64 = inactive.iter().sum();
    let pair = |i: usize, j: usize| {
        let (t, v) = knots[j];
        (b1[i] - t).powi(2) + hyperbola_distance(w1[i], w2[i], v).powi(2)
    };
    let best = injections(knots.len(), k)
        .iter()
        .map(|map| map.iter().enumerate().map(|(j, &i)| pair(i, j) - inactive[i]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    (b2 - g.bias()).powi(2) + total_inactive + best
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodimQuery {
    pub r: f64,
    pub eps_grid: Vec<f64>,
    pub target: PwlFunction,
    pub k: usize,
}

impl CodimQuery {
    /// Radius `3·√(E‖θ‖²)` under `prior`.
    pub fn default_radius(prior: &NnPriorSpec, k: usize) -> f64 {
        3.0 * prior.expected_norm_sq(k).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodimSampler {
    /// Uniform draws on `B_R ∩ supp P` by rejection from the bounding box.
    Uniform,
    /// Importance sampling concentrated on the ε-neighbourhood.
    Importance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodimEstimate {
    pub slope: SlopeEstimate,
    /// Set when the distance oracle is only an upper bound.
    pub upper_bound_based: bool,
}

/// Uniform law on the band `{|xy − v| ≤ δ}` split into the chart
/// `ρ ≤ |x| ≤ R`, its mirror `ρ ≤ |y| ≤ R`, and (when the band reaches it)
/// the box `[−ρ, ρ]²`. Together they cover the band inside `[−R, R]²`.
struct Band {
    v: f64,
    delta: f64,
    rho: f64,
    r: f64,
    chart_area: f64,
    with_box: bool,
}

impl Band {
    fn new(v: f64, delta: f64, r: f64) -> Self {
        let rho = (0.5 * v.abs().sqrt()).min(0.5 * r);
        Self {
            v,
            delta,
            rho,
            r,
            chart_area: 4.0 * delta * (r / rho).ln(),
            with_box: rho * rho >= v.abs() - delta,
        }
    }

    fn parts(&self) -> f64 {
        if self.with_box {
            3.0
        } else {
            2.0
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let pick = rng.gen_range(0..self.parts() as usize);
        if pick == 2 {
            return (self.rho * (2.0 * rng.gen::<f64>() - 1.0), self.rho * (2.0 * rng.gen::<f64>() - 1.0));
        }
        let mag = self.rho * ((self.r / self.rho).ln() * rng.gen::<f64>()).exp();
        let a = if rng.gen::<bool>() { mag } else { -mag };
        let b = (self.v + self.delta * (2.0 * rng.gen::<f64>() - 1.0)) / a;
        if pick == 0 {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn density(&self, x: f64, y: f64) -> f64 {
        let in_band = (x * y - self.v).abs() <= self.delta;
        let chart = |m: f64| in_band && m >= self.rho && m <= self.r;
        let mut d = 0.0;
        if chart(x.abs()) {
            d += 1.0 / self.chart_area;
        }
        if chart(y.abs()) {
            d += 1.0 / self.chart_area;
        }
        if self.with_box && x.abs() <= self.rho && y.abs() <= self.rho {
            d += 1.0 / (4.0 * self.rho * self.rho);
        }
        d / self.parts()
    }
}

struct Setup<'a> {
    g: &'a PwlFunction,
    k: usize,
    r: f64,
    m: f64,
}

impl Setup<'_> {
    fn in_domain(&self, t: &ShallowNetParams) -> bool {
        t.norm_sq() <= self.r * self.r && t.b1.iter().all(|b| (0.0..=self.m).contains(b))
    }

    fn hit(&self, t: &ShallowNetParams, eps: f64) -> bool {
        self.in_domain(t) && assignment_dist_sq(&t.w1, &t.w2, &t.b1, t.b2, self.g) <= eps * eps
    }

    /// `vol(B_R ∩ {b1 ∈ [0, M]^k})`: the remaining `2k + 1` coordinates
    /// fill a ball of radius `√(R² − ‖b1‖²)`.
    fn domain_volume(&self, rng: &SeededRng) -> f64 {
        let n = (2 * self.k + 1) as f64;
        let ln_unit = 0.5 * n * std::f64::consts::PI.ln() - ln_gamma(0.5 * n + 1.0);
        let mom: Vec<Moments> = par_chunks(rng, 200_000, |cnt, gen| {
            let mut mo = Moments::default();
            for _ in 0..cnt {
                let s: f64 = (0..self.k).map(|_| (self.m * gen.gen::<f64>()).powi(2)).sum();
                let rem = self.r * self.r - s;
                mo.push(if rem > 0.0 { (ln_unit + 0.5 * n * rem.ln()).exp() } else { 0.0 });
            }
            mo
        });
        let mut all = Moments::default();
        mom.iter().for_each(|m| all.merge(m));
        all.mean() * self.m.powi(self.k as i32)
    }
}

fn estimate_uniform(s: &Setup, eps: f64, n: u64, rng: &SeededRng) -> ComplexityEstimate {
    let k = s.k;
    let parts = par_chunks(rng, n, |cnt, gen| {
        let mut t = ShallowNetParams::zeros(k);
        let (mut acc, mut hits) = (0u64, 0u64);
        for _ in 0..cnt {
            for i in 0..k {
                t.w1[i] = s.r * (2.0 * gen.gen::<f64>() - 1.0);
                t.w2[i] = s.r * (2.0 * gen.gen::<f64>() - 1.0);
                t.b1[i] = s.m * gen.gen::<f64>();
            }
            t.b2 = s.r * (2.0 * gen.gen::<f64>() - 1.0);
            if t.norm_sq() <= s.r * s.r {
                acc += 1;
                if s.hit(&t, eps) {
                    hits += 1;
                }
            }
        }
        (acc, hits)
    });
    let (acc, hits) = parts.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let p = hits as f64 / acc.max(1) as f64;
    let se = (p * (1.0 - p) / acc.max(1) as f64).sqrt();
    ComplexityEstimate::from_probability(p, se, acc, hits, eps * eps, Method::NaiveMC)
}

fn estimate_importance(s: &Setup, eps: f64, n: u64, domain_vol: f64, rng: &SeededRng) -> ComplexityEstimate {
    let k = s.k;
    let knots = s.g.knots();
    let c = knots.len();
    let maps = injections(c, k);
    let delta = eps * (2.0 * s.r + eps);
    let bands: Vec<Band> = knots.iter().map(|&(_, v)| Band::new(v, delta, s.r)).collect();
    let free_density = 1.0 / (4.0 * s.r * s.r * s.m);
    let box_density = 1.0 / (2.0 * eps);

    let density = |t: &ShallowNetParams| -> f64 {
        if (t.b2 - s.g.bias()).abs() > eps {
            return 0.0;
        }
        let total: f64 = maps
            .iter()
            .map(|map| {
                let mut d = 1.0;
                let mut used = vec![false; k];
                for (j, &i) in map.iter().enumerate() {
                    used[i] = true;
                    if (t.b1[i] - knots[j].0).abs() > eps {
                        return 0.0;
                    }
                    d *= box_density * bands[j].density(t.w1[i], t.w2[i]);
                }
                for i in (0..k).filter(|&i| !used[i]) {
                    let inside = t.w1[i].abs() <= s.r && t.w2[i].abs() <= s.r && (0.0..=s.m).contains(&t.b1[i]);
                    d *= if inside { free_density } else { 0.0 };
                }
                d
            })
            .sum();
        box_density * total / maps.len() as f64
    };

    let parts = par_chunks(rng, n, |cnt, gen| {
        let mut t = ShallowNetParams::zeros(k);
        let mut mom = Moments::default();
        let mut hits = 0u64;
        for _ in 0..cnt {
            let map = &maps[gen.gen_range(0..maps.len())];
            for i in 0..k {
                t.w1[i] = s.r * (2.0 * gen.gen::<f64>() - 1.0);
                t.w2[i] = s.r * (2.0 * gen.gen::<f64>() - 1.0);
                t.b1[i] = s.m * gen.gen::<f64>();
            }
            for (j, &i) in map.iter().enumerate() {
                t.b1[i] = knots[j].0 + eps * (2.0 * gen.gen::<f64>() - 1.0);
                let (a, b) = bands[j].sample(gen);
                t.w1[i] = a;
                t.w2[i] = b;
            }
            t.b2 = s.g.bias() + eps * (2.0 * gen.gen::<f64>() - 1.0);
            if s.hit(&t, eps) {
                hits += 1;
                mom.push(1.0 / density(&t));
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
    ComplexityEstimate::from_probability(
        mom.mean() / domain_vol,
        mom.std_err() / domain_vol,
        n,
        hits,
        eps * eps,
        Method::ImportanceSampling,
    )
}

/// Slope of `ln vol-fraction` against `ln ε`; grid point `i` draws from
/// `rng.substream(i)`.
pub fn codim_estimate(
    q: &CodimQuery,
    prior: &NnPriorSpec,
    n: u64,
    sampler: CodimSampler,
    rng: &SeededRng,
) -> Result<CodimEstimate> {
    check_eps_grid(&q.eps_grid)?;
    let c = q.target.knots().len();
    if c > q.k {
        return Err(Error::invalid(format!("{c} knots exceed the node budget {}", q.k)));
    }
    if q.k > c + 1 {
        return Err(Error::UnsupportedTarget(format!("distance oracle needs k ≤ c + 1, got k = {}", q.k)));
    }
    if !(q.r > 0.0) {
        return Err(Error::invalid("ball radius must be positive"));
    }
    if q.target.knots().iter().any(|&(t, v)| !(t > 0.0 && t < prior.m) || v == 0.0) {
        return Err(Error::UnsupportedTarget("knots must lie strictly inside the bias range".into()));
    }
    let s = Setup { g: &q.target, k: q.k, r: q.r, m: prior.m };
    let vol = s.domain_volume(&rng.substream(u64::MAX));
    let per: Vec<ComplexityEstimate> = q
        .eps_grid
        .iter()
        .enumerate()
        .map(|(i, &e)| match sampler {
            CodimSampler::Uniform => estimate_uniform(&s, e, n, &rng.substream(i as u64)),
            CodimSampler::Importance => estimate_importance(&s, e, n, vol, &rng.substream(i as u64)),
        })
        .collect();
    if let Some(e) = per.iter().find(|e| !e.is_finite()) {
        return Err(Error::InsufficientSamples(format!("no hits at eps = {}", e.epsilon_sq.sqrt())));
    }
    Ok(CodimEstimate { slope: fit_slope(&q.eps_grid, per)?, upper_bound_based: q.k > c.max(1) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::min_norm_realization;

    #[test]
    fn hyperbola_examples() {
        assert!(hyperbola_distance(2.0, 2.0, 4.0) < 1e-12);
        assert!((hyperbola_distance(0.0, 0.0, 1.0) - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(hyperbola_distance(0.3, -2.0, 0.0), 0.3);
    }

    #[test]
    fn hyperbola_matches_grid_search() {
        for &(p, q, v) in &[(0.5, -1.0, 2.0), (-1.5, 0.2, -0.7), (3.0, 0.1, 0.5), (0.0, 1.0, -1.0)] {
            let mut best = f64::INFINITY;
            for i in 1..=200_000 {
                let x = -8.0 + 16.0 * i as f64 / 200_001.0;
                best = best.min((x - p).powi(2) + (v / x - q).powi(2));
            }
            let d = hyperbola_distance(p, q, v);
            assert!((d - best.sqrt()).abs() < 1e-4, "({p},{q},{v}): {d} vs {}", best.sqrt());
            assert!(d <= best.sqrt() + 1e-12);
        }
    }

    #[test]
    fn zero_at_min_norm_realization() {
        let g = PwlFunction::canonicalize(&[(0.3, 2.0), (0.7, -1.0)], 0.5).unwrap();
        let t = min_norm_realization(&g, 2).unwrap();
        assert!(dist_to_representation_set(&t, &g).unwrap() < 1e-12);
        let t3 = min_norm_realization(&g, 3).unwrap();
        assert!(dist_to_representation_set(&t3, &g).unwrap() < 1e-12);
        assert!(dist_to_representation_set(&min_norm_realization(&g, 4).unwrap(), &g).is_err());
    }

    #[test]
    fn band_density_integrates_to_one() {
        let b = Band::new(0.8, 0.7, 3.0);
        assert!(b.with_box);
        let mut rng = SeededRng::new(1, 0).generator();
        // E_q[1/q] over the support equals its area; compare with a grid
        let n = 200_000;
        let mut s = 0.0;
        for _ in 0..n {
            let (x, y) = b.sample(&mut rng);
            s += 1.0 / b.density(x, y);
        }
        let mc_area = s / n as f64;
        let h = 0.005;
        let mut grid_area = 0.0;
        let m = (8.0 / h) as i64;
        for i in -m..m {
            for j in -m..m {
                let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if b.density(x, y) > 0.0 {
                    grid_area += h * h;
                }
            }
        }
        assert!((mc_area / grid_area - 1.0).abs() < 0.02, "{mc_area} vs {grid_area}");
    }

    #[test]
    fn importance_matches_uniform_at_coarse_eps() {
        let prior = NnPriorSpec::default_for(1);
        let g = PwlFunction::canonicalize(&[(0.5, 1.0)], 0.2).unwrap();
        let r = CodimQuery::default_radius(&prior, 1);
        let s = Setup { g: &g, k: 1, r, m: prior.m };
        let rng = SeededRng::new(2, 0);
        let vol = s.domain_volume(&rng.substream(9));
        let u = estimate_uniform(&s, 0.3, 2_000_000, &rng.substream(0));
        let i = estimate_importance(&s, 0.3, 200_000, vol, &rng.substream(1));
        let z = (u.chi - i.chi).abs() / (u.std_err.powi(2) + i.std_err.powi(2)).sqrt();
        assert!(u.n_hits > 100 && z < 3.0, "{u:?} vs {i:?}");
    }
}
