//! One function per subcommand. Each takes a resolved configuration and
//! returns the CSV report together with any failed checks.

mod checks;
mod complexity;

pub use checks::{cmd_pacbayes, cmd_periodic, cmd_projection_check, cmd_sgld_check, PACBAYES, PERIODIC, PROJECTION, SGLD};
pub use complexity::{cmd_codim, cmd_linear_complexity, cmd_nn_complexity, cmd_one_change, CODIM, LINEAR, NN, ONE_CHANGE};

use bayescomplex_core::priors::NnPriorSpec;
use bayescomplex_core::PwlFunction;
use toml::Value;

use crate::config::Config;
use crate::CliError;

fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::Float(x)).collect())
}

/// The shallow prior, with `"auto"` entries taken from the default scaling
/// for `k` nodes.
fn nn_prior(cfg: &mut Config, k: usize) -> Result<NnPriorSpec, CliError> {
    let d = NnPriorSpec::default_for(k);
    cfg.resolve("sigma_w_sq", Value::Float(d.sigma_w_sq));
    cfg.resolve("m", Value::Float(d.m));
    cfg.resolve("sigma_b_sq", Value::Float(d.sigma_b_sq));
    Ok(NnPriorSpec::new(cfg.f64("sigma_w_sq")?, cfg.f64("m")?, cfg.f64("sigma_b_sq")?)?)
}

/// A target on `[0, 1]` with `c` slope changes; by default evenly spaced
/// knots with alternating unit slope changes.
fn knot_target(cfg: &mut Config, c: usize) -> Result<PwlFunction, CliError> {
    let pos: Vec<f64> = (0..c).map(|j| (j + 1) as f64 / (c + 1) as f64).collect();
    let slopes: Vec<f64> = (0..c).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
    cfg.resolve("knots", floats(&pos));
    cfg.resolve("slopes", floats(&slopes));
    let (pos, slopes) = (cfg.f64_list("knots")?, cfg.f64_list("slopes")?);
    if pos.len() != c || slopes.len() != c {
        return Err(CliError::Config(format!("`knots` and `slopes` need exactly c = {c} entries")));
    }
    let knots: Vec<(f64, f64)> = pos.into_iter().zip(slopes).collect();
    Ok(PwlFunction::canonicalize(&knots, cfg.f64("bias")?)?)
}
