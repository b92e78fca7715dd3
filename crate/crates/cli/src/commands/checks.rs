use bayescomplex_core::complexity::{linear_sharp_closed_form, LinearFamily};
use bayescomplex_core::models::linear::LinearHypothesis;
use bayescomplex_core::models::{
    build_periodic_deep_net, deep::shallow_constrained_count, min_norm_realization, shallow_to_pwl, LinearTarget,
    ShallowNetParams,
};
use bayescomplex_core::numeric::stats::{ks_two_sample, line_fit, Moments};
use bayescomplex_core::pacbayes::{
    conjugate_empirical_loss, conjugate_posterior_linear, conjugate_true_loss, divergence_upper_bound,
    empirical_complexity_linear_exact, find_sigma_alg, generate_dataset, kl_gaussians, pac_bayes_rhs, run_sgld,
    theorem_bound, ConjugateGibbs, DatasetDesign, GaussianPosterior, LossSpec, SgldConfig,
};
use bayescomplex_core::projection::{
    project_to_target, project_to_zero, project_to_zero_with_bias, EffectiveNet,
};
use bayescomplex_core::pwl::{l2_distance_sq, periodize};
use bayescomplex_core::{Error, L2Measure, PwlFunction, SeededRng};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{Config, Schema};
use crate::report::CsvReport;
use crate::CliError;

pub const PERIODIC: Schema = &[("l", "8"), ("profile_x", "[0.0, 0.5, 1.0]"), ("profile_y", "[0.0, 1.0, 0.0]"), ("grid", "10000")];

/// Deep realization of an `l`-fold periodic profile against the shallow
/// knot-wise count.
pub fn cmd_periodic(cfg: &mut Config) -> Result<CsvReport, CliError> {
    let l = cfg.usize("l")?;
    let g0 = PwlFunction::from_breakpoints(&cfg.f64_list("profile_x")?, &cfg.f64_list("profile_y")?)?;
    let grid = cfg.usize("grid")?.max(2);
    let deep = build_periodic_deep_net(&g0, l)?;
    let g = periodize(&g0, l)?;
    let sup_err = (0..grid)
        .map(|i| {
            let x = l as f64 * i as f64 / (grid - 1) as f64;
            (deep.net.forward(x) - g.eval_unchecked(x)).abs()
        })
        .fold(0.0, f64::max);
    let m = g0.interior_knots().filter(|k| k.0 < 1.0).count();
    let deep_bound = 4 * l + 2 * m + 6;
    let shallow_formula = 2 * (l * (m + 2)) + 1;
    let shallow_knotwise = shallow_constrained_count(&g);
    let mut rep = CsvReport::new(&[
        "l", "m", "deep_count", "deep_bound", "shallow_formula_count", "shallow_knotwise_count", "sup_err", "pass",
    ]);
    let ok = rep.check(sup_err < 1e-9, format!("sup error {sup_err:e}"))
        & rep.check(deep.constrained_parameter_count <= deep_bound, "deep count above 4l + 2m + 6")
        & rep.check(deep.constrained_parameter_count < shallow_formula, "deep count not below the shallow count");
    rep.row(vec![
        ("l", l.into()),
        ("m", m.into()),
        ("deep_count", deep.constrained_parameter_count.into()),
        ("deep_bound", deep_bound.into()),
        ("shallow_formula_count", shallow_formula.into()),
        ("shallow_knotwise_count", shallow_knotwise.into()),
        ("sup_err", sup_err.into()),
        ("pass", ok.into()),
    ]);
    Ok(rep)
}

pub const PACBAYES: Schema = &[
    ("seed", "42"),
    ("coeffs", "[0.5, -0.3, 0.2]"),
    ("n", "200"),
    ("sigma_e_sq", "0.01"),
    ("sigma_w_sq", "1.0"),
    ("clip_c", "4.0"),
    ("beta", "1.0"),
    ("trials", "50"),
    ("replicas", "32"),
    ("tol", "0.001"),
];

/// Conjugate linear experiment: the temperature search, then per-trial
/// losses, KL divergences and bounds at `σ_alg²`.
pub fn cmd_pacbayes(cfg: &mut Config) -> Result<CsvReport, CliError> {
    let seed = cfg.u64("seed")?;
    let rng = SeededRng::new(seed, 0);
    let coeffs = cfg.f64_list("coeffs")?;
    let (n, trials) = (cfg.usize("n")?, cfg.usize("trials")?);
    let (sigma_e_sq, sigma_w_sq, beta) = (cfg.f64("sigma_e_sq")?, cfg.positive("sigma_w_sq")?, cfg.f64("beta")?);
    let spec = LossSpec::new(cfg.f64("clip_c")?)?;
    if trials < 2 {
        return Err(CliError::Config("`trials` must be at least 2".into()));
    }
    let family = LinearFamily::new(coeffs.len(), sigma_w_sq)?;
    let g = LinearHypothesis { basis: family.basis, w: coeffs.clone() };
    let oracle = ConjugateGibbs { family: family.clone(), spec };
    let design = DatasetDesign { target: &g, n, sigma_e_sq, measure: L2Measure::UniformSym, replicas: cfg.usize("replicas")? };
    let tol = cfg.positive("tol")?;
    let alg = find_sigma_alg(beta, &design, &oracle, tol, &rng.substream(0))?;
    let chi_sharp = linear_sharp_closed_form(&LinearTarget::realizable(coeffs), sigma_w_sq.sqrt(), beta * sigma_e_sq)?;
    let bound = theorem_bound(sigma_e_sq, beta, chi_sharp.chi, n, spec.clip_c)?;
    let prior = GaussianPosterior::prior(family.d(), sigma_w_sq);

    let mut rep = CsvReport::new(&[
        "kind", "trial", "seed", "sigma_y_sq", "l_s", "l_d", "kl", "divergence_bound", "pac_rhs", "chi_sharp",
        "theorem_bound", "std_err", "pass",
    ]);
    let (mut ld_m, mut gap) = (Moments::default(), Moments::default());
    let trial_rng = rng.substream(1);
    for t in 0..trials {
        let s = generate_dataset(&g, n, sigma_e_sq, L2Measure::UniformSym, &trial_rng.substream(t as u64))?;
        let q = conjugate_posterior_linear(&s, &family, alg.sigma_y_sq)?;
        let ls = conjugate_empirical_loss(&q, &family.basis, &s, spec)?;
        let ld = conjugate_true_loss(&q, &family.basis, &g, sigma_e_sq, spec)?;
        let kl = kl_gaussians(&q, &prior)?;
        let chi_e = empirical_complexity_linear_exact(&s, &family, alg.sigma_y_sq / n as f64)?;
        let div = divergence_upper_bound(&chi_e, n, alg.sigma_y_sq, ls)?;
        let rhs = pac_bayes_rhs(ls, kl, n, spec.clip_c)?;
        let bounded = [ls, ld].iter().all(|l| (0.0..=spec.clip_c).contains(l));
        rep.check(bounded, format!("trial {t}: a loss left [0, C]"));
        rep.check(div >= kl - 1e-9, format!("trial {t}: divergence bound {div} below KL {kl}"));
        ld_m.push(ld);
        gap.push(rhs - ld);
        rep.row(vec![
            ("kind", "trial".into()),
            ("trial", t.into()),
            ("seed", seed.into()),
            ("sigma_y_sq", alg.sigma_y_sq.into()),
            ("l_s", ls.into()),
            ("l_d", ld.into()),
            ("kl", kl.into()),
            ("divergence_bound", div.into()),
            ("pac_rhs", rhs.into()),
            ("pass", (ld <= rhs && bounded).into()),
        ]);
    }
    let converged = rep.check(
        alg.converged && (alg.loss - alg.target_loss).abs() <= tol,
        format!("σ_alg² search ended at loss {} (target {})", alg.loss, alg.target_loss),
    );
    rep.row(vec![
        ("kind", "search".into()),
        ("seed", seed.into()),
        ("sigma_y_sq", alg.sigma_y_sq.into()),
        ("l_s", alg.loss.into()),
        ("pass", converged.into()),
    ]);
    let pac_ok = rep.check(gap.mean() >= -3.0 * gap.std_err(), "mean L_D(Q) above the mean PAC-Bayes bound");
    rep.row(vec![
        ("kind", "pac_bayes".into()),
        ("seed", seed.into()),
        ("l_d", ld_m.mean().into()),
        ("pac_rhs", (ld_m.mean() + gap.mean()).into()),
        ("std_err", gap.std_err().into()),
        ("pass", pac_ok.into()),
    ]);
    let thm_ok = rep.check(ld_m.mean() <= bound + 3.0 * ld_m.std_err(), "mean L_D(Q(σ_alg²)) above the theorem bound");
    rep.row(vec![
        ("kind", "theorem".into()),
        ("seed", seed.into()),
        ("sigma_y_sq", alg.sigma_y_sq.into()),
        ("l_d", ld_m.mean().into()),
        ("chi_sharp", chi_sharp.chi.into()),
        ("theorem_bound", bound.into()),
        ("std_err", ld_m.std_err().into()),
        ("pass", thm_ok.into()),
    ]);
    Ok(rep)
}

pub const SGLD: Schema = &[
    ("seed", "42"),
    ("coeffs", "[0.7]"),
    ("n", "50"),
    ("sigma_e_sq", "0.05"),
    ("sigma_w_sq", "1.0"),
    ("sigma_y_sq", "0.1"),
    ("eta", "0.002"),
    ("draws", "10000"),
    ("burn_in", "2000"),
    ("thin", "300"),
    ("map_eta", "0.05"),
    ("map_steps", "20000"),
    ("alpha", "0.01"),
    ("var_tolerance", "0.1"),
];

/// SGLD against the exact Gaussian posterior of a linear model: moments,
/// a two-sample KS test per coordinate, and the noiseless MAP limit.
pub fn cmd_sgld_check(cfg: &mut Config) -> Result<CsvReport, CliError> {
    let seed = cfg.u64("seed")?;
    let rng = SeededRng::new(seed, 0);
    let coeffs = cfg.f64_list("coeffs")?;
    let family = LinearFamily::new(coeffs.len(), cfg.positive("sigma_w_sq")?)?;
    let g = LinearHypothesis { basis: family.basis, w: coeffs };
    let s = generate_dataset(&g, cfg.usize("n")?, cfg.f64("sigma_e_sq")?, L2Measure::UniformSym, &rng.substream(0))?;
    let sigma_y_sq = cfg.positive("sigma_y_sq")?;
    let q = conjugate_posterior_linear(&s, &family, sigma_y_sq)?;
    let (draws, burn_in, thin) = (cfg.usize("draws")?, cfg.usize("burn_in")?, cfg.usize("thin")?);
    let sgld_cfg = SgldConfig::new(cfg.positive("eta")?, burn_in + draws * thin, burn_in, thin, sigma_y_sq)?;
    let chain = run_sgld(&s, &family, &sgld_cfg, &rng.substream(1))?;
    let map_cfg = SgldConfig {
        noise: false,
        init: Some(vec![0.0; family.d()]),
        ..SgldConfig::new(cfg.positive("map_eta")?, cfg.usize("map_steps")?, 0, 1, sigma_y_sq)?
    };
    let map = run_sgld(&s, &family, &map_cfg, &rng.substream(2))?.last;
    let mut exact_gen = rng.substream(3).generator();
    let exact: Vec<Vec<f64>> = (0..chain.draws.len()).map(|_| q.sample(&mut exact_gen)).collect();
    let (alpha, var_tol) = (cfg.f64("alpha")?, cfg.positive("var_tolerance")?);

    let mut rep = CsvReport::new(&[
        "coord", "seed", "n_draws", "mean_sgld", "mean_exact", "std_err", "var_sgld", "var_exact", "ks_d", "ks_p",
        "map", "map_err", "pass",
    ]);
    for i in 0..family.d() {
        let mut m = Moments::default();
        chain.draws.iter().for_each(|d| m.push(d[i]));
        let a: Vec<f64> = chain.draws.iter().map(|d| d[i]).collect();
        let b: Vec<f64> = exact.iter().map(|d| d[i]).collect();
        let (ks_d, ks_p) = ks_two_sample(&a, &b)?;
        let (mu, var) = (q.mean[i], q.covariance[(i, i)]);
        let map_err = (map[i] - mu).abs();
        let ok = rep.check((m.mean() - mu).abs() <= 3.0 * m.std_err(), format!("coordinate {i}: chain mean off"))
            & rep.check((m.variance() / var - 1.0).abs() <= var_tol, format!("coordinate {i}: chain variance off"))
            & rep.check(ks_p > alpha, format!("coordinate {i}: KS rejects at {alpha}"))
            & rep.check(map_err <= 1e-6, format!("coordinate {i}: MAP error {map_err:e}"));
        rep.row(vec![
            ("coord", i.into()),
            ("seed", seed.into()),
            ("n_draws", chain.draws.len().into()),
            ("mean_sgld", m.mean().into()),
            ("mean_exact", mu.into()),
            ("std_err", m.std_err().into()),
            ("var_sgld", m.variance().into()),
            ("var_exact", var.into()),
            ("ks_d", ks_d.into()),
            ("ks_p", ks_p.into()),
            ("map", map[i].into()),
            ("map_err", map_err.into()),
            ("pass", ok.into()),
        ]);
    }
    Ok(rep)
}

pub const PROJECTION: Schema = &[
    ("seed", "42"),
    ("cases", "200"),
    ("k_max", "5"),
    ("log10_scale_min", "-6.0"),
    ("log10_scale_max", "-2.0"),
    ("slope_min", "0.35"),
];

fn is_zero(theta: &ShallowNetParams) -> bool {
    shallow_to_pwl(theta).approx_eq(&PwlFunction::constant(0.0, 1.0, 0.0).expect("valid"), 1e-12)
}

/// Randomized zero projections against their movement bound, and the decay
/// exponents of the bias and target projections.
pub fn cmd_projection_check(cfg: &mut Config) -> Result<CsvReport, CliError> {
    let seed = cfg.u64("seed")?;
    let rng = SeededRng::new(seed, 0);
    let (cases, k_max) = (cfg.usize("cases")?, cfg.usize("k_max")?.max(1));
    let (lo, hi) = (cfg.f64("log10_scale_min")?, cfg.f64("log10_scale_max")?);
    if !(lo < hi) {
        return Err(CliError::Config("need log10_scale_min < log10_scale_max".into()));
    }
    let mut rep = CsvReport::new(&[
        "kind", "case", "seed", "k", "norm_sq", "movement_sq", "effective_movement_sq", "bound", "slope", "exact", "pass",
    ]);
    let mut gen = rng.substream(0).generator();
    let mut done = 0;
    while done < cases {
        let k = gen.gen_range(1..=k_max);
        let scale = 10f64.powf(gen.gen_range(lo..hi));
        let u: Vec<f64> = (0..k).map(|_| scale * gen.gen_range(-1.0..1.0)).collect();
        let w1: Vec<f64> = u.iter().map(|x| x.abs().sqrt()).collect();
        let w2: Vec<f64> = u.iter().map(|x| x.signum() * x.abs().sqrt()).collect();
        let b1: Vec<f64> = (0..k).map(|_| gen.gen_range(0.0..1.2)).collect();
        let theta = ShallowNetParams::new(w1, w2, b1, 0.0)?;
        let r = match project_to_zero(&theta) {
            Ok(r) => r,
            Err(Error::Precondition(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        let exact = is_zero(&r.theta_star);
        let within = r.effective_movement_sq <= r.bound;
        rep.check(exact, format!("case {done}: projection is not exactly zero"));
        rep.check(within, format!("case {done}: movement {} above bound {}", r.effective_movement_sq, r.bound));
        rep.row(vec![
            ("kind", "hardone".into()),
            ("case", done.into()),
            ("seed", seed.into()),
            ("k", k.into()),
            ("norm_sq", EffectiveNet::from_params(&theta).norm_sq().into()),
            ("movement_sq", r.movement_sq.into()),
            ("effective_movement_sq", r.effective_movement_sq.into()),
            ("bound", r.bound.into()),
            ("exact", exact.into()),
            ("pass", (exact && within).into()),
        ]);
        done += 1;
    }
    let slope_min = cfg.f64("slope_min")?;
    for (kind, slope) in [("with_bias_slope", with_bias_slope()?), ("target_slope", target_slope(&rng.substream(1))?)] {
        let ok = rep.check(slope >= slope_min, format!("{kind} {slope} below {slope_min}"));
        rep.row(vec![("kind", kind.into()), ("seed", seed.into()), ("slope", slope.into()), ("pass", ok.into())]);
    }
    Ok(rep)
}

/// Log-log slope of movement against `‖f‖²` as a biased network is scaled
/// toward zero.
fn with_bias_slope() -> Result<f64, CliError> {
    let base = ShallowNetParams::new(vec![1.0, -0.8, 0.6], vec![0.3, 0.5, -0.4], vec![0.2, 0.45, 0.8], 0.2)?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for s in [1e-2, 1e-2 / 3.0, 1e-3, 1e-3 / 3.0, 1e-4] {
        let mut t = base.clone();
        t.w2.iter_mut().for_each(|w| *w *= s);
        t.b2 *= s;
        let r = project_to_zero_with_bias(&t, 2.0, 1.0)?;
        if !is_zero(&r.theta_star) {
            return Err(CliError::Assertion("bias projection is not exactly zero".into()));
        }
        xs.push(EffectiveNet::from_params(&t).norm_sq().ln());
        ys.push(r.movement_sq.ln());
    }
    Ok(line_fit(&xs, &ys)?.slope)
}

/// The same slope for projections onto a two-knot target from shrinking
/// Gaussian perturbations of its minimum-norm realization.
fn target_slope(rng: &SeededRng) -> Result<f64, CliError> {
    let g = PwlFunction::canonicalize(&[(0.3, 1.5), (0.7, -2.0)], 0.25)?;
    let base = min_norm_realization(&g, 2)?.to_flat();
    let mut gen = rng.generator();
    let noise: Vec<f64> = base.iter().map(|_| gen.sample(StandardNormal)).collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for s in [1e-3, 3e-4, 1e-4, 3e-5, 1e-5] {
        let flat: Vec<f64> = base.iter().zip(&noise).map(|(x, z)| x + s * z).collect();
        let mut theta = ShallowNetParams::from_flat(&flat)?;
        theta.b1.iter_mut().for_each(|b| *b = b.abs());
        let r = project_to_target(&theta, &g, 1.01 * theta.norm_sq().sqrt(), 1e3)?;
        if !shallow_to_pwl(&r.theta_star).approx_eq(&g, 1e-12) {
            return Err(CliError::Assertion("target projection does not reproduce the target".into()));
        }
        xs.push(l2_distance_sq(&shallow_to_pwl(&theta), &g, L2Measure::UniformUnit)?.ln());
        ys.push(r.movement_sq.ln());
    }
    Ok(line_fit(&xs, &ys)?.slope)
}
