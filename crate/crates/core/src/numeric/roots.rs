//! Real roots of low-degree polynomials.
//!
//! Roots are isolated between consecutive critical points (found
//! recursively from the derivative) and refined by bracketed Newton.

const MAX_ITER: usize = 200;

fn horner(c: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &ci in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + ci;
    }
    (p, dp)
}

fn refine(c: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let (flo, _) = horner(c, lo);
    let ascending = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let (p, dp) = horner(c, x);
        if p == 0.0 {
            return x;
        }
        if (p < 0.0) == ascending {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - p / dp;
        let next = if dp != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) || hi - lo <= f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// Real roots of `Σ c_i x^i`, sorted ascending. Roots of even multiplicity
/// are reported when the polynomial vanishes at a critical point to within
/// rounding.
pub fn real_roots(c: &[f64]) -> Vec<f64> {
    let mut n = c.len();
    while n > 0 && c[n - 1] == 0.0 {
        n -= 1;
    }
    let c = &c[..n];
    match n {
        0 | 1 => return Vec::new(),
        2 => return vec![-c[0] / c[1]],
        3 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * cc;
            if disc < 0.0 {
                return Vec::new();
            }
            let q = -0.5 * (b + b.signum_nonzero() * disc.sqrt());
            let mut r = if q == 0.0 { vec![0.0, 0.0] } else { vec![q / a, cc / q] };
            r.sort_by(f64::total_cmp);
            return r;
        }
        _ => {}
    }
    let lead = c[n - 1];
    let bound = 1.0 + c[..n - 1].iter().map(|ci| (ci / lead).abs()).fold(0.0, f64::max);
    let deriv: Vec<f64> = c.iter().enumerate().skip(1).map(|(i, ci)| i as f64 * ci).collect();
    let mut pts = vec![-bound];
    pts.extend(real_roots(&deriv).into_iter().filter(|x| x.abs() < bound));
    pts.push(bound);
    let scale = c.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut roots: Vec<f64> = Vec::new();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, _) = horner(c, a);
        let (fb, _) = horner(c, b);
        if fa.abs() <= 64.0 * f64::EPSILON * scale * (1.0 + a.abs()).powi(n as i32 - 1) {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(refine(c, a, b));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
    roots
}

trait SignumNonzero {
    fn signum_nonzero(self) -> f64;
}

impl SignumNonzero for f64 {
    fn signum_nonzero(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}
