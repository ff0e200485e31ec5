//! Minimum-norm point of the convex hull of finitely many vectors
//! (Wolfe's nearest-point algorithm).

use faer::Mat;

use super::dot;

const WEIGHT_EPS: f64 = 1e-14;
const OPT_TOL: f64 = 1e-12;

/// Weights `v` summing to one that minimize `|sum v_i p_i|` over the affine
/// hull of the selected points, by least squares on `p_i - p_0`.
fn affine_minimizer(points: &[Vec<f64>], set: &[usize]) -> Vec<f64> {
    let k = set.len();
    if k == 1 {
        return vec![1.0];
    }
    let dim = points[0].len();
    let p0 = &points[set[0]];
    let m = Mat::<f64>::from_fn(dim, k - 1, |r, c| points[set[c + 1]][r] - p0[r]);
    let rhs = Mat::<f64>::from_fn(dim, 1, |r, _| -p0[r]);
    let Ok(svd) = m.thin_svd() else {
        let mut v = vec![0.0; k];
        v[0] = 1.0;
        return v;
    };
    let s = svd.S().column_vector();
    let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
    let ut_b = svd.U().transpose() * &rhs;
    let mut c = vec![0.0; k - 1];
    for idx in 0..s.nrows() {
        if s[idx] > 1e-12 * smax && s[idx] > 0.0 {
            let coef = ut_b[(idx, 0)] / s[idx];
            for (j, cj) in c.iter_mut().enumerate() {
                *cj += svd.V()[(j, idx)] * coef;
            }
        }
    }
    let mut v = Vec::with_capacity(k);
    v.push(1.0 - c.iter().sum::<f64>());
    v.extend(c);
    v
}

fn combine(points: &[Vec<f64>], set: &[usize], w: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; points[0].len()];
    for (&i, &wi) in set.iter().zip(w) {
        for (xr, pr) in x.iter_mut().zip(&points[i]) {
            *xr += wi * pr;
        }
    }
    x
}

/// Returns `(d, weights)` with `d = sum weights_i points_i`, weights on the
/// unit simplex, and `|d|` minimal over the hull.
pub fn min_norm_convex_hull(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let m = points.len();
    if m == 0 {
        return (Vec::new(), Vec::new());
    }
    let start = (0..m)
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap_or(0);
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max);
    let mut set = vec![start];
    let mut w = vec![1.0];
    let mut x = points[start].clone();

    for _ in 0..(10 * m + 100) {
        let xx = dot(&x, &x);
        let (j, xpj) = (0..m)
            .map(|i| (i, dot(&x, &points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, xx));
        if xpj > xx - OPT_TOL * scale || set.contains(&j) {
            break;
        }
        set.push(j);
        w.push(0.0);
        loop {
            let v = affine_minimizer(points, &set);
            if v.iter().all(|&vi| vi > WEIGHT_EPS) {
                w = v;
                break;
            }
            let theta = w
                .iter()
                .zip(&v)
                .filter(|(_, &vi)| vi <= WEIGHT_EPS)
                .map(|(&wi, &vi)| if wi - vi > 0.0 { wi / (wi - vi) } else { 0.0 })
                .fold(1.0, f64::min);
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi = (1.0 - theta) * *wi + theta * vi;
            }
            let keep: Vec<bool> = w.iter().map(|&wi| wi > WEIGHT_EPS).collect();
            if keep.iter().all(|&k| k) {
                // numerical stall; drop the smallest weight
                let (imin, _) = w.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
                set.remove(imin);
                w.remove(imin);
            } else {
                let mut idx = 0;
                set.retain(|_| {
                    idx += 1;
                    keep[idx - 1]
                });
                w.retain(|&wi| wi > WEIGHT_EPS);
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= total);
            if set.len() <= 1 {
                w = vec![1.0];
                break;
            }
        }
        x = combine(points, &set, &w);
    }

    let mut weights = vec![0.0; m];
    for (&i, &wi) in set.iter().zip(&w) {
        weights[i] += wi.max(0.0);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|wi| *wi /= total);
    let d = combine(points, &(0..m).collect::<Vec<_>>(), &weights);
    (d, weights)
}
