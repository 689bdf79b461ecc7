//! One-dimensional search: golden-section maximization, bracket expansion
//! for concave objectives, and bisection for monotone equations.

use rayon::prelude::*;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Location and value of a maximum found by a bracketed search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

fn finite_or_neg_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `rel_tol * max(1, |x|)` or after
/// `max_iter` shrink steps. NaN evaluations count as `-inf`. Ties keep the
/// left point, so equal-value plateaus resolve to the smallest abscissa.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> Maximum
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = finite_or_neg_inf(f(c));
    let mut fd = finite_or_neg_inf(f(d));
    let mut iterations = 0;
    while iterations < max_iter && (b - a) > rel_tol * c.abs().max(1.0) {
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = finite_or_neg_inf(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = finite_or_neg_inf(f(d));
        }
    }
    // Endpoints are candidates too: a concave objective may peak at the boundary.
    let fa = finite_or_neg_inf(f(a));
    let fb = finite_or_neg_inf(f(b));
    let mut best = (a, fa);
    for cand in [(c, fc), (d, fd), (b, fb)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Maximum {
        x: best.0,
        value: best.1,
        iterations,
        bracket: (a, b),
    }
}

/// Brackets the maximizer of a concave `f` on `[0, limit)`.
///
/// Starts from `[0, start]` and doubles the right edge until the objective
/// stops increasing or the edge reaches `limit`.
pub fn concave_bracket<F>(mut f: F, start: f64, limit: f64) -> (f64, f64, usize)
where
    F: FnMut(f64) -> f64,
{
    let mut prev = 0.0;
    let mut cur = start.min(limit);
    let mut f_cur = finite_or_neg_inf(f(cur));
    let f0 = finite_or_neg_inf(f(0.0));
    if f_cur < f0 {
        return (0.0, cur, 0);
    }
    let mut steps = 0;
    loop {
        if cur >= limit || steps >= 1100 {
            return (prev, cur.min(limit), steps);
        }
        let next = (2.0 * cur).min(limit);
        let f_next = finite_or_neg_inf(f(next));
        steps += 1;
        if f_next < f_cur {
            return (prev, next, steps);
        }
        prev = cur;
        cur = next;
        f_cur = f_next;
    }
}

/// Maximizes a concave `f` over `[0, limit)` by bracket expansion then
/// golden-section refinement.
pub fn maximize_concave<F>(mut f: F, start: f64, limit: f64, rel_tol: f64, max_iter: usize) -> Maximum
where
    F: FnMut(f64) -> f64,
{
    let (lo, hi, _) = concave_bracket(&mut f, start, limit);
    golden_section_max(f, lo, hi, rel_tol, max_iter)
}

/// Evaluates `f` on `grid` (in parallel), picks the best point (smallest
/// index on ties) and refines by golden section between its neighbours.
pub fn grid_then_golden<F>(f: F, grid: &[f64], rel_tol: f64, max_iter: usize) -> Maximum
where
    F: Fn(f64) -> f64 + Sync,
{
    assert!(!grid.is_empty(), "empty search grid");
    let values: Vec<f64> = grid.par_iter().map(|&x| finite_or_neg_inf(f(x))).collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden_section_max(&f, lo, hi, rel_tol, max_iter);
    if refined.value > values[best] {
        refined
    } else {
        Maximum {
            x: grid[best],
            value: values[best],
            iterations: refined.iterations,
            bracket: (lo, hi),
        }
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Solves `f(x) = target` for non-decreasing `f` on the bracket `[lo, hi]`,
/// with `f(lo) <= target <= f(hi)`. Runs to floating-point resolution.
pub fn bisect_increasing<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64, max_iter: usize) -> f64
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == target {
            return mid;
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f(lo), f(hi));
    if (target - flo).abs() <= (fhi - target).abs() {
        lo
    } else {
        hi
    }
}
