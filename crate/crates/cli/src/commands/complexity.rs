use bayescomplex_core::complexity::{
    codim_estimate, fit_slope, limiting_complexity, one_change_bounds, q_closed_form, sharp_complexity_mc,
    CodimQuery, CodimSampler, ComplexityEstimate, LinearFamily, Method, ShallowFamily,
};
use bayescomplex_core::models::LinearTarget;
use bayescomplex_core::SeededRng;
use toml::Value;

use super::{knot_target, nn_prior};
use crate::config::{Config, Schema};
use crate::report::CsvReport;
use crate::CliError;

pub const LINEAR: Schema = &[
    ("seed", "42"),
    ("d", "[2, 3, 5]"),
    ("sigma_w", "1.0"),
    ("kappa", "[1.0]"),
    ("eps_grid", "[0.1, 0.03, 0.01, 0.003, 0.001]"),
    ("n_samples", "1000000"),
    ("min_expected_hits", "100.0"),
    ("tolerance", "0.1"),
];

/// Closed-form `ln q(κ, σ_w, ε)` across the grid, a Monte Carlo cross-check
/// wherever the expected hit count allows it, and the fitted slope.
pub fn cmd_linear_complexity(cfg: &mut Config) -> Result<CsvReport, CliError> {
    let rng = SeededRng::new(cfg.u64("seed")?, 0);
    let (sigma_w, grid) = (cfg.positive("sigma_w")?, cfg.f64_list("eps_grid")?);
    let (n, min_hits, tol) = (cfg.u64("n_samples")?, cfg.f64("min_expected_hits")?, cfg.positive("tolerance")?);
    if grid.len() < 3 {
        return Err(CliError::Config("`eps_grid` needs at least three points for a slope".into()));
    }
    let mut rep = CsvReport::new(&[
        "kind", "d", "kappa", "eps", "chi", "chi_mc", "std_err", "n_hits", "n_samples", "seed", "slope", "intercept",
        "expected", "pass",
    ]);
    let seed = cfg.u64("seed")?;
    for (di, &d) in cfg.usize_list("d")?.iter().enumerate() {
        let family = LinearFamily::new(d, sigma_w * sigma_w)?;
        for (ki, &kappa) in cfg.f64_list("kappa")?.iter().enumerate() {
            let mut coeffs = vec![0.0; d];
            coeffs[0] = kappa;
            let target = LinearTarget::realizable(coeffs);
            let mut per = Vec::with_capacity(grid.len());
            for (ei, &eps) in grid.iter().enumerate() {
                let q = q_closed_form(kappa, sigma_w, eps, d)?;
                let exact = ComplexityEstimate::from_log_prob(q.ln(), 0.0, 0, 0, eps * eps, Method::ClosedFormQ);
                let mut cells = vec![
                    ("kind", "point".into()),
                    ("d", d.into()),
                    ("kappa", kappa.into()),
                    ("eps", eps.into()),
                    ("chi", exact.chi.into()),
                    ("seed", seed.into()),
                ];
                if q * n as f64 >= min_hits {
                    // ½‖w − w̃‖² ≤ ε²/2 is the event ‖w − κe₀‖² ≤ ε²
                    let sub = rng.substream(di as u64).substream(ki as u64).substream(ei as u64);
                    let mc = sharp_complexity_mc(&family, &target, 0.5 * eps * eps, n, &sub)?;
                    let agree = (mc.chi - exact.chi).abs() <= 3.0 * mc.std_err;
                    rep.check(agree, format!("d = {d}, κ = {kappa}, ε = {eps}: MC {} vs closed form {}", mc.chi, exact.chi));
                    cells.extend([
                        ("chi_mc", mc.chi.into()),
                        ("std_err", mc.std_err.into()),
                        ("n_hits", mc.n_hits.into()),
                        ("n_samples", n.into()),
                        ("pass", agree.into()),
                    ]);
                }
                rep.row(cells);
                per.push(exact);
            }
            let fit = fit_slope(&grid, per)?;
            let ok = (fit.slope - d as f64).abs() <= tol * d as f64;
            rep.check(ok, format!("d = {d}, κ = {kappa}: slope {} not within {tol}·d", fit.slope));
            rep.row(vec![
                ("kind", "slope".into()),
                ("d", d.into()),
                ("kappa", kappa.into()),
                ("slope", fit.slope.into()),
                ("intercept", fit.intercept.into()),
                ("expected", (d as f64).into()),
                ("pass", ok.into()),
            ]);
        }
    }
    Ok(rep)
}

pub const NN: Schema = &[
    ("seed", "42"),
    ("k", "1"),
    ("c", "1"),
    ("knots", "\"auto\""),
    ("slopes", "\"auto\""),
    ("bias", "0.2"),
    ("sigma_w_sq", "\"auto\""),
    ("m", "\"auto\""),
    ("sigma_b_sq", "\"auto\""),
    ("eps_grid", "[0.3, 0.2, 0.14, 0.1, 0.07, 0.05]"),
    ("n_samples", "400000"),
    ("cloud_scale", "3.0"),
];

/// Importance-sampled limiting complexity of a `c`-knot target, checked
/// against the sandwich `(2c+1)/5 ≤ slope ≤ 2c+1`.
pub fn cmd_nn_complexity(cfg: &mut Config) -> Result<CsvReport, CliError> {
    let (k, c) = (cfg.usize("k")?, cfg.usize("c")?);
    let prior = nn_prior(cfg, k)?;
    let g = knot_target(cfg, c)?;
    let seed = cfg.u64("seed")?;
    let (grid, n) = (cfg.f64_list("eps_grid")?, cfg.u64("n_samples")?);
    let family = ShallowFamily::new(k, prior)?;
    let s = limiting_complexity(&family, &g, &grid, n, cfg.positive("cloud_scale")?, &SeededRng::new(seed, 0))?;
    let mut rep = CsvReport::new(&[
        "kind", "eps", "chi", "std_err", "n_hits", "n_samples", "seed", "slope", "ci_halfwidth", "lower", "upper", "pass",
    ]);
    for (e, est) in grid.iter().zip(&s.per_eps) {
        rep.row(vec![
            ("kind", "point".into()),
            ("eps", (*e).into()),
            ("chi", est.chi.into()),
            ("std_err", est.std_err.into()),
            ("n_hits", est.n_hits.into()),
            ("n_samples", est.n_samples.into()),
            ("seed", seed.into()),
        ]);
    }
    let (lower, upper) = ((2 * c + 1) as f64 / 5.0, (2 * c + 1) as f64);
    let ok = s.slope >= lower - s.ci_halfwidth && s.slope <= upper + s.ci_halfwidth;
    rep.check(ok, format!("slope {} ± {} outside [{lower}, {upper}]", s.slope, s.ci_halfwidth));
    rep.row(vec![
        ("kind", "slope".into()),
        ("seed", seed.into()),
        ("n_samples", n.into()),
        ("slope", s.slope.into()),
        ("ci_halfwidth", s.ci_halfwidth.into()),
        ("lower", lower.into()),
        ("upper", upper.into()),
        ("pass", ok.into()),
    ]);
    Ok(rep)
}

pub const CODIM: Schema = &[
    ("seed", "42"),
    ("k", "1"),
    ("c", "1"),
    ("knots", "\"auto\""),
    ("slopes", "\"auto\""),
    ("bias", "0.2"),
    ("sigma_w_sq", "\"auto\""),
    ("m", "\"auto\""),
    ("sigma_b_sq", "\"auto\""),
    ("radius", "\"auto\""),
    ("eps_grid", "[0.3, 0.2, 0.14, 0.1, 0.07, 0.05]"),
    ("n_samples", "400000"),
    ("sampler", "\"importance\""),
    ("tolerance", "\"auto\""),
];

/// Volume scaling of the ε-neighbourhood of the exact representations,
/// checked against the codimension `2c + 1`.
pub fn cmd_codim(cfg: &mut Config) -> Result<CsvReport, CliError> {
    let (k, c) = (cfg.usize("k")?, cfg.usize("c")?);
    let prior = nn_prior(cfg, k)?;
    let target = knot_target(cfg, c)?;
    cfg.resolve("radius", Value::Float(CodimQuery::default_radius(&prior, k)));
    cfg.resolve("tolerance", Value::Float(if c <= 1 { 0.5 } else { 0.7 }));
    let sampler = match cfg.string("sampler")? {
        "importance" => CodimSampler::Importance,
        "uniform" => CodimSampler::Uniform,
        other => return Err(CliError::Config(format!("`sampler` must be \"importance\" or \"uniform\", got {other:?}"))),
    };
    let seed = cfg.u64("seed")?;
    let n = cfg.u64("n_samples")?;
    let q = CodimQuery { r: cfg.positive("radius")?, eps_grid: cfg.f64_list("eps_grid")?, target, k };
    let est = codim_estimate(&q, &prior, n, sampler, &SeededRng::new(seed, 0))?;
    let mut rep = CsvReport::new(&[
        "kind", "eps", "neg_log_volume", "std_err", "n_hits", "n_samples", "seed", "slope", "ci_halfwidth", "expected",
        "upper_bound_based", "pass",
    ]);
    for (e, p) in q.eps_grid.iter().zip(&est.slope.per_eps) {
        rep.row(vec![
            ("kind", "point".into()),
            ("eps", (*e).into()),
            ("neg_log_volume", p.chi.into()),
            ("std_err", p.std_err.into()),
            ("n_hits", p.n_hits.into()),
            ("n_samples", p.n_samples.into()),
            ("seed", seed.into()),
        ]);
    }
    let expected = (2 * c + 1) as f64;
    let tol = cfg.positive("tolerance")?;
    let ok = (est.slope.slope - expected).abs() <= tol;
    rep.check(ok, format!("codimension {} not within {tol} of {expected}", est.slope.slope));
    rep.row(vec![
        ("kind", "slope".into()),
        ("seed", seed.into()),
        ("n_samples", n.into()),
        ("slope", est.slope.slope.into()),
        ("ci_halfwidth", est.slope.ci_halfwidth.into()),
        ("expected", expected.into()),
        ("upper_bound_based", est.upper_bound_based.into()),
        ("pass", ok.into()),
    ]);
    Ok(rep)
}

pub const ONE_CHANGE: Schema = &[
    ("seed", "42"),
    ("a", "0.5"),
    ("b", "0.5"),
    ("t", "0.5"),
    ("k", "8"),
    ("sigma_w_sq", "\"auto\""),
    ("m", "\"auto\""),
    ("sigma_b_sq", "\"auto\""),
    ("eps", "0.05"),
    ("n_samples", "400000"),
    ("cloud_scale", "3.0"),
];

/// Sharp complexity of `b + a[x − t]₊` against its lower and upper bounds.
pub fn cmd_one_change(cfg: &mut Config) -> Result<CsvReport, CliError> {
    let k = cfg.usize("k")?;
    let prior = nn_prior(cfg, k)?;
    let seed = cfg.u64("seed")?;
    let n = cfg.u64("n_samples")?;
    let r = one_change_bounds(
        cfg.f64("a")?,
        cfg.f64("b")?,
        cfg.f64("t")?,
        k,
        &prior,
        cfg.positive("eps")?,
        n,
        cfg.positive("cloud_scale")?,
        &SeededRng::new(seed, 0),
    )?;
    let mut rep = CsvReport::new(&[
        "chi", "std_err", "n_hits", "n_samples", "seed", "lower", "upper", "assumptions_ok", "pass",
    ]);
    let se = r.chi_hat.std_err;
    let ok = r.chi_hat.chi >= r.lower - 3.0 * se && r.chi_hat.chi <= r.upper + 3.0 * se;
    rep.check(ok, format!("χ# = {} ± {se} outside [{}, {}]", r.chi_hat.chi, r.lower, r.upper));
    rep.row(vec![
        ("chi", r.chi_hat.chi.into()),
        ("std_err", se.into()),
        ("n_hits", r.chi_hat.n_hits.into()),
        ("n_samples", n.into()),
        ("seed", seed.into()),
        ("lower", r.lower.into()),
        ("upper", r.upper.into()),
        ("assumptions_ok", r.assumptions_ok.into()),
        ("pass", ok.into()),
    ]);
    Ok(rep)
}
