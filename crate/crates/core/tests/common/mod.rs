//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use funarch::io::{read_wide, VariableCurves};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn load_wide(name: &str) -> VariableCurves {
    let f = std::fs::File::open(data_path(name)).unwrap();
    read_wide(f, name.trim_end_matches(".csv")).unwrap()
}

/// Squared norm of `v` under the optional Gram matrix `w`.
fn sq_norm(v: &[f64], w: Option<&Array2<f64>>) -> f64 {
    match w {
        None => v.iter().map(|x| x * x).sum(),
        Some(w) => {
            let m = v.len();
            let mut s = 0.0;
            for a in 0..m {
                for b in 0..m {
                    s += v[a] * w[[a, b]] * v[b];
                }
            }
            s
        }
    }
}

fn inner(u: &[f64], v: &[f64], w: Option<&Array2<f64>>) -> f64 {
    match w {
        None => u.iter().zip(v).map(|(a, b)| a * b).sum(),
        Some(w) => {
            let m = u.len();
            let mut s = 0.0;
            for a in 0..m {
                for b in 0..m {
                    s += u[a] * w[[a, b]] * v[b];
                }
            }
            s
        }
    }
}

/// Solves the small dense system `a x = b` by Gaussian elimination with
/// partial pivoting; `None` when singular.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-13 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for cc in c..n {
                a[r][cc] -= f * a[c][cc];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Exact `min ||x - sum_j a_j z_j||²` over the probability simplex, by
/// enumerating supports: on each support the affine-constrained least squares
/// solution is computed in closed form and kept if it is feasible.
pub fn simplex_distance(x: &[f64], zs: &[Vec<f64>], w: Option<&Array2<f64>>) -> f64 {
    let k = zs.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << k) {
        let sup: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).collect();
        let s = sup.len();
        // stationarity with a Lagrange multiplier for the sum constraint
        let mut a = vec![vec![0.0; s + 1]; s + 1];
        let mut b = vec![0.0; s + 1];
        for (p, &i) in sup.iter().enumerate() {
            for (q, &j) in sup.iter().enumerate() {
                a[p][q] = inner(&zs[i], &zs[j], w);
            }
            a[p][s] = 1.0;
            a[s][p] = 1.0;
            b[p] = inner(&zs[i], x, w);
        }
        b[s] = 1.0;
        let Some(sol) = solve_small(a, b) else { continue };
        if sol[..s].iter().any(|&v| v < -1e-12) {
            continue;
        }
        let mut r = x.to_vec();
        for (p, &i) in sup.iter().enumerate() {
            for (rv, zv) in r.iter_mut().zip(&zs[i]) {
                *rv -= sol[p] * zv;
            }
        }
        best = best.min(sq_norm(&r, w));
    }
    best
}

/// Exact archetypoid RSS of the rows `set` of `x`.
pub fn exact_set_rss(x: ArrayView2<'_, f64>, set: &[usize], w: Option<&Array2<f64>>) -> f64 {
    let zs: Vec<Vec<f64>> = set.iter().map(|&i| x.row(i).to_vec()).collect();
    x.rows().into_iter().map(|r| simplex_distance(&r.to_vec(), &zs, w)).sum()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive archetypoid optimum: (best set, RSS).
pub fn exhaustive_archetypoids(x: ArrayView2<'_, f64>, k: usize, w: Option<&Array2<f64>>) -> (Vec<usize>, f64) {
    subsets(x.nrows(), k)
        .into_iter()
        .map(|s| {
            let r = exact_set_rss(x, &s, w);
            (s, r)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

/// Index minimizing the summed squared distance to all rows.
pub fn medoid(x: ArrayView2<'_, f64>) -> usize {
    let n = x.nrows();
    let cost = |j: usize| -> f64 {
        (0..n).map(|i| x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sum()
    };
    (0..n).min_by(|&a, &b| cost(a).total_cmp(&cost(b))).unwrap()
}

/// Textbook recursive Cox–de Boor value of the `i`-th B-spline of `order` on
/// the full knot vector `t`; the right end point belongs to the last span.
pub fn cox_de_boor(i: usize, order: usize, t: &[f64], x: f64) -> f64 {
    if order == 1 {
        let last = *t.last().unwrap();
        let in_span = (t[i] <= x && x < t[i + 1]) || (x == last && t[i] < t[i + 1] && t[i + 1] == last);
        return if in_span { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = t[i + order - 1] - t[i];
    if d1 > 0.0 {
        v += (x - t[i]) / d1 * cox_de_boor(i, order - 1, t, x);
    }
    let d2 = t[i + order] - t[i + 1];
    if d2 > 0.0 {
        v += (t[i + order] - x) / d2 * cox_de_boor(i + 1, order - 1, t, x);
    }
    v
}

/// Convex hull (counter-clockwise, no collinear points) by monotone chain.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Euclidean distance from `q` to the boundary polygon `hull`.
pub fn distance_to_boundary(q: (f64, f64), hull: &[(f64, f64)]) -> f64 {
    let n = hull.len();
    (0..n)
        .map(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % n];
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 { (((q.0 - a.0) * dx + (q.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let (px, py) = (a.0 + t * dx, a.1 + t * dy);
            ((q.0 - px).powi(2) + (q.1 - py).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Row sums of a matrix view.
pub fn row_sums(m: ArrayView2<'_, f64>) -> Vec<f64> {
    m.rows().into_iter().map(|r: ArrayView1<'_, f64>| r.sum()).collect()
}

/// Standard normal draw by the Box–Muller transform.
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
