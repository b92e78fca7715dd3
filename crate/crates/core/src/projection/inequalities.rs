//! The two elementary inequalities behind the projection bounds.

/// `(Σ X_i², Σ x_i² / 8)` for the prefix sums `X` of `xs`; the first
/// always dominates.
pub fn prefix_sum_sides(xs: &[f64]) -> (f64, f64) {
    let mut acc = 0.0;
    let mut lhs = 0.0;
    for &x in xs {
        acc += x;
        lhs += acc * acc;
    }
    (lhs, xs.iter().map(|x| x * x).sum::<f64>() / 8.0)
}

/// `(1/12)·Σ W_i² (b_{i+1} − b_i)³` over the sorted biases in `[0, 1)`
/// with `b_{k+1} = 1`: a lower bound on `∫₀¹ (Σ u_i[x − b_i]₊)²`.
pub fn l2_lower_bound(u: &[f64], b: &[f64]) -> f64 {
    let mut nodes: Vec<(f64, f64)> = b.iter().copied().zip(u.iter().copied()).filter(|&(t, _)| t < 1.0).collect();
    nodes.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut w = 0.0;
    let mut total = 0.0;
    for (i, &(t, v)) in nodes.iter().enumerate() {
        w += v;
        let next = nodes.get(i + 1).map_or(1.0, |n| n.0);
        total += w * w * (next - t).powi(3);
    }
    total / 12.0
}
