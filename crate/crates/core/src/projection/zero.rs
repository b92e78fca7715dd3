//! Projection onto exact representations of the zero function.

use super::{finish, BiasCase, Collapse, EffectiveNet, EffectiveProjection, PhaseTrace, ProjectionResult, Zeroing};
use crate::error::{Error, Result};
use crate::models::ShallowNetParams;

/// Two-phase zeroing of `Σ_{i ∈ include} u_i[x − b_i]₊` on `[0, 1]`, in
/// place. Nodes outside `include` are untouched and must not act on `[0, 1]`
/// for the result to vanish there.
fn zero_core(net: &mut EffectiveNet, include: &[usize], trace: &mut PhaseTrace) {
    let mut order: Vec<usize> = include.iter().copied().filter(|&i| net.b[i] < 1.0).collect();
    order.sort_by(|&i, &j| net.b[i].total_cmp(&net.b[j]).then(i.cmp(&j)));
    let m = order.len();
    if m == 0 {
        return;
    }
    let mut w = Vec::with_capacity(m);
    let mut acc = 0.0;
    for &i in &order {
        acc += net.u[i];
        w.push(acc);
    }
    let right: Vec<f64> = (0..m).map(|p| if p + 1 < m { net.b[order[p + 1]] } else { 1.0 }).collect();
    let short: Vec<bool> = (0..m).map(|p| right[p] - net.b[order[p]] < w[p].abs()).collect();

    // phase 1: each maximal run of short intervals collapses onto its right end
    let mut p = 0;
    while p < m {
        if !short[p] {
            p += 1;
            continue;
        }
        let mut q = p;
        while q + 1 < m && short[q + 1] {
            q += 1;
        }
        let to = right[q];
        for &i in &order[p..=q] {
            net.b[i] = to;
        }
        trace.collapses.push(Collapse { nodes: order[p..=q].to_vec(), to });
        p = q + 1;
    }

    // phase 2: zero the prefix sums at the left ends of the long intervals
    let mut applied = 0.0;
    for p in (0..m).filter(|&p| !short[p]) {
        let cur = w[p] + applied;
        if cur != 0.0 {
            net.u[order[p]] -= cur;
            applied -= cur;
            trace.zeroings.push(Zeroing { node: order[p], delta: -cur });
        }
    }
}

/// Linear pieces `(start, end, value at start, slope)` of `f` on `[0, 1]`.
fn pieces(net: &EffectiveNet) -> Vec<(f64, f64, f64, f64)> {
    let mut knots: Vec<(f64, f64)> = net.b.iter().copied().zip(net.u.iter().copied()).collect();
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let (mut x, mut value, mut slope) = (0.0, net.b2, 0.0);
    for &(t, v) in &knots {
        if t <= 0.0 {
            value += v * -t;
            slope += v;
            continue;
        }
        if t >= 1.0 {
            break;
        }
        if t > x {
            out.push((x, t, value, slope));
            value += slope * (t - x);
            x = t;
        }
        slope += v;
    }
    out.push((x, 1.0, value, slope));
    out
}

/// A point `x1` where `f` is in `[b2/2, b2]` and descends at least as
/// steeply as on average between `0` and the first crossing of `b2/2`.
/// Returns `(x1, f(x1), W(x1))`; requires `b2 > 0`.
fn steep_point(net: &EffectiveNet) -> Option<(f64, f64, f64)> {
    let b2 = net.b2;
    let ps = pieces(net);
    let x0 = ps.iter().find_map(|&(s, e, v, k)| {
        let ve = v + k * (e - s);
        (ve <= 0.5 * b2).then(|| s + (0.5 * b2 - v) / k)
    })?;
    // last return to the level b2 before x0
    let mut xl: f64 = 0.0;
    for &(s, e, v, k) in ps.iter().filter(|p| p.0 < x0) {
        let e = e.min(x0);
        if k == 0.0 {
            if v == b2 {
                xl = xl.max(e);
            }
        } else {
            let r = s + (b2 - v) / k;
            if (s..=e).contains(&r) {
                xl = xl.max(r);
            }
        }
    }
    let (s, e, v, k) = ps
        .iter()
        .filter_map(|&(s, e, v, k)| {
            let (a, b) = (s.max(xl), e.min(x0));
            (b > a).then_some((a, b, v + k * (a - s), k))
        })
        .min_by(|a, b| a.3.total_cmp(&b.3))?;
    let x1 = 0.5 * (s + e);
    Some((x1, v + k * (x1 - s), k))
}

/// Exact zero representation of `net` (with output bias), following the
/// small-bias / steep-descent case split.
pub(super) fn zero_with_bias(net: &EffectiveNet) -> Result<(EffectiveNet, PhaseTrace)> {
    let mut trace = PhaseTrace::default();
    let all: Vec<usize> = (0..net.k()).collect();
    let fnorm = net.norm_sq().sqrt();
    if net.b2 == 0.0 {
        let mut out = net.clone();
        zero_core(&mut out, &all, &mut trace);
        return Ok((out, trace));
    }
    if net.b2.abs() <= fnorm.sqrt() {
        let mut out = net.clone();
        out.b2 = 0.0;
        trace.bias_case = BiasCase::Small;
        zero_core(&mut out, &all, &mut trace);
        return Ok((out, trace));
    }
    let sg = net.b2.signum();
    let mut pos = net.clone();
    pos.u.iter_mut().for_each(|u| *u *= sg);
    pos.b2 *= sg;
    let (x1, f1, w1) = steep_point(&pos)
        .ok_or_else(|| Error::Precondition("output bias never halves on [0, 1]; f is not small".into()))?;
    let shift = x1 - f1 / w1;
    let early: Vec<usize> = (0..pos.k()).filter(|&i| pos.b[i] < x1).collect();
    let pivot = (0..pos.k())
        .filter(|&i| pos.b[i] > x1)
        .min_by(|&i, &j| pos.b[i].total_cmp(&pos.b[j]).then(i.cmp(&j)))
        .filter(|&i| pos.b[i] < 1.0)
        .ok_or_else(|| Error::Precondition("no knot follows the steep segment inside [0, 1]".into()))?;

    let merged: f64 = early.iter().map(|&i| pos.u[i]).sum::<f64>() + pos.u[pivot];
    let mut red = pos.clone();
    red.u[pivot] = merged;
    red.b[pivot] = 0.0;
    red.b2 = 0.0;
    let rest: Vec<usize> = (0..pos.k()).filter(|i| !early.contains(i)).collect();
    zero_core(&mut red, &rest, &mut trace);

    let delta = red.u[pivot] - merged;
    let landing = red.b[pivot];
    let kept_bias = landing == 0.0;
    let mut out = red;
    out.u[pivot] = pos.u[pivot] + delta;
    for &i in &early {
        out.b[i] = if kept_bias { pos.b[i] - shift } else { landing };
    }
    out.b2 = if kept_bias { pos.b2 } else { 0.0 };
    trace.bias_case = BiasCase::Steep { x1, shift, pivot, kept_bias };

    out.u.iter_mut().for_each(|u| *u *= sg);
    out.b2 *= sg;
    trace.zeroings.iter_mut().for_each(|z| z.delta *= sg);
    Ok((out, trace))
}

fn check_biases(b: &[f64]) -> Result<()> {
    if let Some(x) = b.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::Precondition(format!("hidden bias {x} is negative")));
    }
    Ok(())
}

/// Zero projection of `Σ u_i[x − b_i]₊` in effective coordinates, with
/// bound `96·k^{13/5}·(‖f‖²)^{2/5}`.
pub fn project_to_zero_effective(net: &EffectiveNet) -> Result<EffectiveProjection> {
    if net.b2 != 0.0 {
        return Err(Error::Precondition("output bias must be zero".into()));
    }
    check_biases(&net.b)?;
    let k = net.k() as f64;
    let nsq = net.norm_sq();
    let limit = 1.0 / (12.0 * (k + 1.0).powi(5));
    if !(nsq < limit) {
        return Err(Error::Precondition(format!("‖f‖² = {nsq:e} is not below {limit:e}")));
    }
    let mut star = net.clone();
    let mut phases = PhaseTrace::default();
    zero_core(&mut star, &(0..net.k()).collect::<Vec<_>>(), &mut phases);
    Ok(EffectiveProjection {
        movement_sq: net.distance_sq(&star),
        bound: 96.0 * k.powf(2.6) * nsq.powf(0.4),
        star,
        phases,
    })
}

/// Zero projection of a network without output bias.
pub fn project_to_zero(theta: &ShallowNetParams) -> Result<ProjectionResult> {
    let start = EffectiveNet::from_params(theta);
    let p = project_to_zero_effective(&start)?;
    Ok(finish(theta, &start, &p.star, p.bound, p.phases, Vec::new()))
}

pub(super) fn check_ball(theta: &ShallowNetParams, r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::invalid("ball radius must be positive"));
    }
    let n = theta.norm_sq().sqrt();
    if n > r * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("‖θ‖ = {n} exceeds R = {r}")));
    }
    check_biases(&theta.b1)
}

pub(super) fn check_guard(nsq: f64, r: f64, k: usize, fraction: f64) -> Result<()> {
    let limit = fraction * r.powi(-4) * (k.max(1) as f64).powi(-5);
    if nsq > limit {
        return Err(Error::Precondition(format!("‖f‖² = {nsq:e} exceeds the guard {limit:e}")));
    }
    Ok(())
}

/// Zero projection of a network with output bias inside `B_R`, with bound
/// `k⁵·R^{4/5}·‖f‖^{2/5}`.
pub fn project_to_zero_with_bias(theta: &ShallowNetParams, r: f64, guard_fraction: f64) -> Result<ProjectionResult> {
    check_ball(theta, r)?;
    let start = EffectiveNet::from_params(theta);
    let nsq = start.norm_sq();
    check_guard(nsq, r, theta.k(), guard_fraction)?;
    let (star, phases) = zero_with_bias(&start)?;
    let bound = (theta.k() as f64).powi(5) * r.powf(0.8) * nsq.powf(0.2);
    Ok(finish(theta, &start, &star, bound, phases, Vec::new()))
}
