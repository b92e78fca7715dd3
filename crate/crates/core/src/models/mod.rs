//! Hypothesis classes: orthonormal linear models, shallow ReLU networks in
//! the product parametrization, and deep ReLU networks for periodic targets.

pub mod deep;
pub mod linear;
pub mod shallow;

pub use deep::{build_periodic_deep_net, DeepNetParams, PeriodicDeepNet};
pub use linear::{eval_linear, linear_l2_distance_sq, BasisSpec, LinearModelParams, LinearTarget};
pub use shallow::{min_norm_realization, shallow_to_pwl, ShallowNetParams, INACTIVE_BIAS};

/// Anything that maps a scalar input to a scalar prediction.
pub trait Hypothesis {
    fn predict(&self, x: f64) -> f64;
}

impl Hypothesis for crate::pwl::PwlFunction {
    fn predict(&self, x: f64) -> f64 {
        self.eval_unchecked(x)
    }
}

impl<F: Fn(f64) -> f64> Hypothesis for F {
    fn predict(&self, x: f64) -> f64 {
        self(x)
    }
}
