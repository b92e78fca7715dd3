//! Constructive projections of shallow-network parameters onto exact
//! representations of the zero function or of a piecewise-linear target,
//! together with the movement bounds they certify.
//!
//! The algorithms act on effective slopes `u_i = w1_i·w2_i`. A change of
//! `u_i` is realized on the smaller-magnitude factor of the pair.

mod inequalities;
mod target;
mod zero;

pub use inequalities::{l2_lower_bound, prefix_sum_sides};
pub use target::project_to_target;
pub use zero::{project_to_zero, project_to_zero_effective, project_to_zero_with_bias};

use crate::models::ShallowNetParams;
use crate::pwl::{mean_sq_raw, PwlFunction};

/// Guard fraction: the bias and target projections require
/// `‖f‖² ≤ fraction·R⁻⁴k⁻⁵`.
pub const DEFAULT_GUARD_FRACTION: f64 = 1e-3;

/// `b2 + Σ u_i [x − b_i]₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveNet {
    pub u: Vec<f64>,
    pub b: Vec<f64>,
    pub b2: f64,
}

impl EffectiveNet {
    pub fn from_params(theta: &ShallowNetParams) -> Self {
        Self { u: (0..theta.k()).map(|i| theta.effective(i)).collect(), b: theta.b1.clone(), b2: theta.b2 }
    }

    pub fn k(&self) -> usize {
        self.u.len()
    }

    fn knots(&self) -> Vec<(f64, f64)> {
        self.b.iter().copied().zip(self.u.iter().copied()).collect()
    }

    /// `∫₀¹ f²`.
    pub fn norm_sq(&self) -> f64 {
        mean_sq_raw(0.0, 1.0, self.b2, &mut self.knots())
    }

    pub fn to_pwl(&self) -> PwlFunction {
        PwlFunction::canonicalize(&self.knots(), self.b2).expect("finite parameters")
    }

    pub fn distance_sq(&self, other: &EffectiveNet) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        d(&self.u, &other.u) + d(&self.b, &other.b) + (self.b2 - other.b2).powi(2)
    }
}

/// Biases moved together onto the right end of a run of short intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Collapse {
    pub nodes: Vec<usize>,
    pub to: f64,
}

/// Effective slope of `node` changed by `delta` to zero a prefix sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zeroing {
    pub node: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasCase {
    /// No output bias to handle.
    Absent,
    /// `|b2| ≤ ‖f‖^{1/2}`: the bias is set to zero.
    Small,
    /// Steep descent from `f(0) = b2`: biases left of `x1` are shifted by
    /// `shift` and the next node `pivot` is moved to 0. With
    /// `kept_bias` the output bias survives and the shifted biases are
    /// negative; otherwise they join the pivot and the bias is zeroed.
    Steep { x1: f64, shift: f64, pivot: usize, kept_bias: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub collapses: Vec<Collapse>,
    pub zeroings: Vec<Zeroing>,
    pub bias_case: BiasCase,
}

impl Default for PhaseTrace {
    fn default() -> Self {
        Self { collapses: Vec::new(), zeroings: Vec::new(), bias_case: BiasCase::Absent }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub theta_star: ShallowNetParams,
    /// `‖θ − θ*‖²` in the `(w1, w2, b1, b2)` coordinates.
    pub movement_sq: f64,
    /// The same movement in effective coordinates `(u, b1, b2)`.
    pub effective_movement_sq: f64,
    /// Right-hand side of the movement bound, with unnamed constants set to 1.
    pub bound: f64,
    pub phases: PhaseTrace,
    /// Nodes of `θ*` sitting on each target knot.
    pub assignment: Vec<Vec<usize>>,
    /// False when some hidden bias of `θ*` is negative.
    pub in_support: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveProjection {
    pub star: EffectiveNet,
    pub movement_sq: f64,
    pub bound: f64,
    pub phases: PhaseTrace,
}

/// New parameters computing `target`, changing only the factor of smaller
/// magnitude where the effective slope moved.
pub(crate) fn realize(theta: &ShallowNetParams, target: &EffectiveNet) -> ShallowNetParams {
    let mut out = theta.clone();
    for i in 0..theta.k() {
        out.b1[i] = target.b[i];
        let u = target.u[i];
        if u == theta.effective(i) {
            continue;
        }
        let (w1, w2) = (theta.w1[i], theta.w2[i]);
        if w1 != 0.0 && w1.abs() >= w2.abs() {
            out.w2[i] = u / w1;
        } else if w2 != 0.0 {
            out.w1[i] = u / w2;
        } else {
            let r = u.abs().sqrt();
            out.w1[i] = r;
            out.w2[i] = u.signum() * r;
        }
    }
    out.b2 = target.b2;
    out
}

fn finish(
    theta: &ShallowNetParams,
    start: &EffectiveNet,
    star: &EffectiveNet,
    bound: f64,
    phases: PhaseTrace,
    assignment: Vec<Vec<usize>>,
) -> ProjectionResult {
    let theta_star = realize(theta, star);
    ProjectionResult {
        movement_sq: theta.distance_sq(&theta_star),
        effective_movement_sq: start.distance_sq(star),
        in_support: theta_star.b1.iter().all(|&b| b >= 0.0),
        theta_star,
        bound,
        phases,
        assignment,
    }
}
