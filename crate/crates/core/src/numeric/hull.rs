//! Lower convex hull of a sampled function graph.

/// Indices of the lower convex hull of points sorted by strictly increasing
/// `x` (monotone-chain scan). Collinear interior points are dropped.
pub fn lower_hull(xs: &[f64], ys: &[f64]) -> Vec<usize> {
    assert_eq!(xs.len(), ys.len());
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (xs[a] - xs[o]) * (ys[i] - ys[o]) - (ys[a] - ys[o]) * (xs[i] - xs[o]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Hull segment `(left, right)` (indices into the sample arrays) whose
/// x-range contains `x`.
pub fn hull_segment(xs: &[f64], hull: &[usize], x: f64) -> (usize, usize) {
    let pos = hull.partition_point(|&i| xs[i] <= x);
    if pos == 0 {
        (hull[0], hull[0])
    } else if pos >= hull.len() {
        let last = hull[hull.len() - 1];
        (last, last)
    } else {
        (hull[pos - 1], hull[pos])
    }
}
