//! Projection onto exact representations of a piecewise-linear target via
//! the augmented difference network `f_θ − g`.

use super::zero::{check_ball, check_guard, zero_with_bias};
use super::{finish, EffectiveNet, ProjectionResult};
use crate::error::{Error, Result};
use crate::models::ShallowNetParams;
use crate::pwl::PwlFunction;

/// Moves `θ` onto a representation of `g` on `[0, 1]`, with bound
/// `k⁷·R^{4/5}·‖g − f_θ‖^{2/5}`.
pub fn project_to_target(
    theta: &ShallowNetParams,
    g: &PwlFunction,
    r: f64,
    guard_fraction: f64,
) -> Result<ProjectionResult> {
    if g.domain() != (0.0, 1.0) {
        return Err(Error::domain("targets live on [0, 1]"));
    }
    let (k, c) = (theta.k(), g.knots().len());
    if c > k {
        return Err(Error::invalid(format!("{c} knots exceed the node budget {k}")));
    }
    if g.knots().iter().any(|&(t, _)| !(t > 0.0)) {
        return Err(Error::UnsupportedTarget("target knots must lie inside (0, 1)".into()));
    }
    check_ball(theta, r)?;
    let start = EffectiveNet::from_params(theta);

    // h = (b2 − b) + Σ u_i[x − b_i]₊ − Σ v_j[x − t_j]₊
    let mut h = start.clone();
    h.b2 -= g.bias();
    for &(t, v) in g.knots() {
        h.u.push(-v);
        h.b.push(t);
    }
    let nsq = h.norm_sq();
    check_guard(nsq, r, k, guard_fraction)?;
    let (h_star, phases) = zero_with_bias(&h)?;

    let mut star = EffectiveNet { u: h_star.u[..k].to_vec(), b: h_star.b[..k].to_vec(), b2: h_star.b2 + g.bias() };
    let moved: Vec<(f64, f64)> = (0..c).map(|j| (h_star.b[k + j], -h_star.u[k + j])).collect();
    let mut assignment = Vec::with_capacity(c);
    for (j, &(t, v)) in g.knots().iter().enumerate() {
        let (tj, vj) = moved[j];
        let clash = moved.iter().enumerate().any(|(l, m)| l != j && m.0 == tj);
        if !(tj > 0.0 && tj < 1.0) || vj == 0.0 || clash {
            return Err(Error::Precondition(format!("target knot {t} was not preserved; ‖g − f‖ is too large")));
        }
        let nodes: Vec<usize> = (0..k).filter(|&i| h_star.b[i] == tj).collect();
        let Some(&first) = nodes.first() else {
            return Err(Error::Precondition(format!("no node lands on the moved knot {tj}")));
        };
        for &i in &nodes {
            star.b[i] = t;
        }
        star.u[first] += v - vj;
        assignment.push(nodes);
    }
    let bound = (k as f64).powi(7) * r.powf(0.8) * nsq.powf(0.2);
    Ok(finish(theta, &start, &star, bound, phases, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{min_norm_realization, shallow_to_pwl};
    use crate::numeric::stats::line_fit;
    use crate::pwl::{l2_distance_sq, L2Measure};
    use crate::rng::SeededRng;
    use rand_distr::{Distribution, StandardNormal};

    fn run(theta: &ShallowNetParams, g: &PwlFunction) -> Result<ProjectionResult> {
        project_to_target(theta, g, 1.01 * theta.norm_sq().sqrt(), 1e3)
    }

    fn target() -> PwlFunction {
        PwlFunction::canonicalize(&[(0.3, 1.5), (0.7, -2.0)], 0.25).unwrap()
    }

    #[test]
    fn exact_realization_is_fixed() {
        let g = target();
        let theta = min_norm_realization(&g, 3).unwrap();
        let r = run(&theta, &g).unwrap();
        assert_eq!(r.theta_star, theta);
        assert_eq!(r.movement_sq, 0.0);
        assert_eq!(r.assignment, vec![vec![0], vec![1]]);
    }

    fn perturbed(g: &PwlFunction, k: usize, s: f64, seed: u64) -> ShallowNetParams {
        let mut rng = SeededRng::new(seed, 0).generator();
        let mut flat = min_norm_realization(g, k).unwrap().to_flat();
        for x in flat.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x += s * z;
        }
        let mut t = ShallowNetParams::from_flat(&flat).unwrap();
        t.b1.iter_mut().for_each(|b| *b = b.abs());
        t
    }

    #[test]
    fn perturbed_realization_recovers_target() {
        let g = target();
        let theta = perturbed(&g, 3, 1e-3, 1);
        let r = run(&theta, &g).unwrap();
        assert!(shallow_to_pwl(&r.theta_star).approx_eq(&g, 1e-12), "{:?}", shallow_to_pwl(&r.theta_star));
        assert!((r.movement_sq - theta.distance_sq(&r.theta_star)).abs() < 1e-15);
        assert!(r.in_support);
    }

    #[test]
    fn movement_slope_over_decay_sequence() {
        let g = target();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for s in [1e-3, 3e-4, 1e-4, 3e-5, 1e-5] {
            let theta = perturbed(&g, 2, s, 2);
            let r = run(&theta, &g).unwrap();
            assert!(shallow_to_pwl(&r.theta_star).approx_eq(&g, 1e-12));
            xs.push(l2_distance_sq(&shallow_to_pwl(&theta), &g, L2Measure::UniformUnit).unwrap().ln());
            ys.push(r.movement_sq.ln());
        }
        let fit = line_fit(&xs, &ys).unwrap();
        assert!(fit.slope >= 0.4 - 0.05, "{}", fit.slope);
    }

    #[test]
    fn optimized_prior_draw_is_projected() {
        let g = target();
        let loss = |t: &ShallowNetParams| l2_distance_sq(&shallow_to_pwl(t), &g, L2Measure::UniformUnit).unwrap();
        let mut theta = perturbed(&g, 3, 0.05, 3);
        theta.b1[2] = 1.3;
        // finite-difference gradient descent down to ‖g − f‖² ≤ 1e-6
        let mut step = 0.1;
        for _ in 0..20_000 {
            let cur = loss(&theta);
            if cur <= 1e-6 {
                break;
            }
            let flat = theta.to_flat();
            let grad: Vec<f64> = (0..flat.len())
                .map(|i| {
                    let mut p = flat.clone();
                    p[i] += 1e-7;
                    (loss(&ShallowNetParams::from_flat(&p).unwrap()) - cur) / 1e-7
                })
                .collect();
            let next: Vec<f64> = flat.iter().zip(&grad).map(|(x, d)| x - step * d).collect();
            let cand = ShallowNetParams::from_flat(&next).unwrap();
            if loss(&cand) < cur && cand.b1.iter().all(|&b| b >= 0.0) {
                theta = cand;
                step *= 1.2;
            } else {
                step *= 0.5;
            }
        }
        assert!(loss(&theta) <= 1e-6);
        let r = run(&theta, &g).unwrap();
        assert!(shallow_to_pwl(&r.theta_star).approx_eq(&g, 1e-12));
        assert_eq!(r.assignment.len(), 2);
    }

    #[test]
    fn too_many_knots_rejected() {
        let g = target();
        let theta = ShallowNetParams::zeros(1);
        assert!(matches!(project_to_target(&theta, &g, 10.0, 1.0), Err(Error::InvalidArgument(_))));
    }
}
