use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_matrix, max_abs};
use crate::error::{Error, Result};

/// Knobs for the active-set solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Weight of the appended sum-to-one row in [`simplex_ls`].
    pub huge_weight: f64,
    /// Cap on active-set iterations; `None` means `3 * p`.
    pub max_active_set_iters: Option<usize>,
    /// Relative tolerance, scaled by `max |T|`, for entering and
    /// dependence decisions.
    pub zero_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            huge_weight: 200.0,
            max_active_set_iters: None,
            zero_tolerance: 1e-10,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.huge_weight > 0.0 && self.huge_weight.is_finite()) {
            return Err(Error::Argument(format!(
                "huge_weight must be positive, got {}",
                self.huge_weight
            )));
        }
        if !(self.zero_tolerance > 0.0 && self.zero_tolerance.is_finite()) {
            return Err(Error::Argument(format!(
                "zero_tolerance must be positive, got {}",
                self.zero_tolerance
            )));
        }
        Ok(())
    }

    fn iteration_cap(&self, p: usize) -> usize {
        self.max_active_set_iters.unwrap_or(3 * p).max(1)
    }
}

/// A least-squares system as seen by the active-set driver.
trait Subproblem {
    fn dim(&self) -> usize;
    /// Writes the negative gradient `T'(u - T w)` into `out`.
    fn dual(&self, w: &[f64], out: &mut [f64]);
    /// Unconstrained solution on the `passive` columns, `None` when they are
    /// numerically dependent.
    fn solve_passive(&self, passive: &[usize]) -> Option<Vec<f64>>;
}

/// Column-oriented design matrix, solved by Householder QR on the passive
/// columns.
struct Dense {
    cols: Vec<Vec<f64>>,
    u: Vec<f64>,
    rank_tol: f64,
}

impl Subproblem for Dense {
    fn dim(&self) -> usize {
        self.cols.len()
    }

    fn dual(&self, w: &[f64], out: &mut [f64]) {
        let mut r = self.u.clone();
        for (col, &wj) in self.cols.iter().zip(w) {
            if wj != 0.0 {
                for (ri, &c) in r.iter_mut().zip(col) {
                    *ri -= wj * c;
                }
            }
        }
        for (o, col) in out.iter_mut().zip(&self.cols) {
            *o = col.iter().zip(&r).map(|(a, b)| a * b).sum();
        }
    }

    fn solve_passive(&self, passive: &[usize]) -> Option<Vec<f64>> {
        let q = self.u.len();
        let mut a = Array2::<f64>::zeros((q, passive.len()));
        for (c, &j) in passive.iter().enumerate() {
            for (i, &v) in self.cols[j].iter().enumerate() {
                a[[i, c]] = v;
            }
        }
        super::qr::lstsq_with_tol(a, &self.u, self.rank_tol).map(|x| x.to_vec())
    }
}

/// Normal-equation form: `gram = T'T`, `rhs = T'u`.
struct Gram<'a> {
    gram: ArrayView2<'a, f64>,
    rhs: ArrayView1<'a, f64>,
    pivot_tol: f64,
}

impl Subproblem for Gram<'_> {
    fn dim(&self) -> usize {
        self.rhs.len()
    }

    fn dual(&self, w: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let row = self.gram.row(j);
            let mut s = self.rhs[j];
            for (l, &wl) in w.iter().enumerate() {
                if wl != 0.0 {
                    s -= row[l] * wl;
                }
            }
            *o = s;
        }
    }

    fn solve_passive(&self, passive: &[usize]) -> Option<Vec<f64>> {
        let s = passive.len();
        let mut l = vec![0.0; s * s];
        for i in 0..s {
            for j in 0..=i {
                let mut v = self.gram[[passive[i], passive[j]]];
                for k in 0..j {
                    v -= l[i * s + k] * l[j * s + k];
                }
                if i == j {
                    if v <= self.pivot_tol {
                        return None;
                    }
                    l[i * s + i] = v.sqrt();
                } else {
                    l[i * s + j] = v / l[j * s + j];
                }
            }
        }
        let mut y: Vec<f64> = passive.iter().map(|&j| self.rhs[j]).collect();
        for i in 0..s {
            for k in 0..i {
                y[i] -= l[i * s + k] * y[k];
            }
            y[i] /= l[i * s + i];
        }
        for i in (0..s).rev() {
            for k in i + 1..s {
                y[i] -= l[k * s + i] * y[k];
            }
            y[i] /= l[i * s + i];
        }
        Some(y)
    }
}

/// Lawson–Hanson active-set iteration.
fn active_set<S: Subproblem>(sys: &S, max_iters: usize, dual_tol: f64) -> Result<Vec<f64>> {
    let p = sys.dim();
    let mut w = vec![0.0; p];
    let mut passive = vec![false; p];
    let mut blocked = vec![false; p];
    let mut dual = vec![0.0; p];
    let mut iters = 0usize;

    loop {
        sys.dual(&w, &mut dual);
        // entering column: largest dual, lowest index on ties
        let mut enter: Option<usize> = None;
        for j in 0..p {
            if passive[j] || blocked[j] || dual[j] <= dual_tol {
                continue;
            }
            if enter.is_none_or(|b| dual[j] > dual[b]) {
                enter = Some(j);
            }
        }
        let Some(j) = enter else { break };
        iters += 1;
        if iters > max_iters {
            return Err(Error::IterationLimit { iterations: max_iters, best: w });
        }
        passive[j] = true;

        let mut first = true;
        loop {
            let idx: Vec<usize> = (0..p).filter(|&i| passive[i]).collect();
            let z = match sys.solve_passive(&idx) {
                Some(z) => z,
                None => {
                    passive[j] = false;
                    blocked[j] = true;
                    break;
                }
            };
            if first {
                let pos = idx.iter().position(|&i| i == j).unwrap();
                if z[pos] <= 0.0 {
                    // roundoff made the entering column useless
                    passive[j] = false;
                    blocked[j] = true;
                    break;
                }
                first = false;
            }
            if z.iter().all(|&v| v > 0.0) {
                for (pos, &i) in idx.iter().enumerate() {
                    w[i] = z[pos];
                }
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }

            // interpolate back to the feasible region
            let mut step = f64::INFINITY;
            let mut leaving = idx[0];
            for (pos, &i) in idx.iter().enumerate() {
                if z[pos] <= 0.0 {
                    let t = w[i] / (w[i] - z[pos]);
                    if t < step {
                        step = t;
                        leaving = i;
                    }
                }
            }
            for (pos, &i) in idx.iter().enumerate() {
                w[i] += step * (z[pos] - w[i]);
            }
            w[leaving] = 0.0;
            let wmax = max_abs(&w);
            for &i in &idx {
                if w[i] <= f64::EPSILON * wmax {
                    w[i] = 0.0;
                    passive[i] = false;
                }
            }
            blocked.iter_mut().for_each(|b| *b = false);

            iters += 1;
            if iters > max_iters {
                return Err(Error::IterationLimit { iterations: max_iters, best: w });
            }
        }
    }
    Ok(w)
}

/// Solves `min ||u - T w||` subject to `w >= 0`.
pub fn nnls_solve(
    t: ArrayView2<'_, f64>,
    u: ArrayView1<'_, f64>,
    opts: &SolverOptions,
) -> Result<Array1<f64>> {
    opts.validate()?;
    check_matrix("T", t)?;
    if u.len() != t.nrows() {
        return Err(Error::Argument(format!(
            "u has length {} but T has {} rows",
            u.len(),
            t.nrows()
        )));
    }
    if let Some(v) = u.iter().find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("u contains non-finite value {v}")));
    }
    let scale = max_abs(t.iter()).max(f64::MIN_POSITIVE);
    let unorm = u.dot(&u).sqrt();
    let sys = Dense {
        cols: t.columns().into_iter().map(|c| c.to_vec()).collect(),
        u: u.to_vec(),
        rank_tol: opts.zero_tolerance * scale * (t.nrows() as f64).sqrt(),
    };
    let tol = opts.zero_tolerance * scale * unorm.max(scale);
    active_set(&sys, opts.iteration_cap(t.ncols()), tol).map(Array1::from)
}

/// Non-negative weights on the unit simplex (approximately), using the
/// penalty row trick: a row of `huge_weight` is appended to `T` and `u`.
pub fn simplex_ls(
    t: ArrayView2<'_, f64>,
    u: ArrayView1<'_, f64>,
    opts: &SolverOptions,
) -> Result<Array1<f64>> {
    opts.validate()?;
    check_matrix("T", t)?;
    if u.len() != t.nrows() {
        return Err(Error::Argument(format!(
            "u has length {} but T has {} rows",
            u.len(),
            t.nrows()
        )));
    }
    let (q, p) = t.dim();
    let h = opts.huge_weight;
    let mut ta = Array2::<f64>::from_elem((q + 1, p), h);
    ta.slice_mut(ndarray::s![..q, ..]).assign(&t);
    let mut ua = Array1::<f64>::from_elem(q + 1, h);
    ua.slice_mut(ndarray::s![..q]).assign(&u);
    nnls_solve(ta.view(), ua.view(), opts)
}

/// NNLS in normal-equation form. `gram = T'T`, `rhs = T'u` and
/// `target_sq_norm = u'u`; used in hot loops where `T'T` is cached.
pub fn nnls_gram<'a>(
    gram: ArrayView2<'a, f64>,
    rhs: ArrayView1<'a, f64>,
    target_sq_norm: f64,
    opts: &SolverOptions,
) -> Result<Array1<f64>> {
    let p = rhs.len();
    if gram.dim() != (p, p) || p == 0 {
        return Err(Error::Argument(format!(
            "gram is {:?}, rhs has length {p}",
            gram.dim()
        )));
    }
    let max_diag = gram.diag().iter().fold(0.0_f64, |a, &v| a.max(v));
    let scale = max_diag.sqrt().max(f64::MIN_POSITIVE);
    let sys = Gram {
        gram,
        rhs,
        // squared scale: pivots below this mark a dependent column
        pivot_tol: 1e-3 * opts.zero_tolerance * max_diag,
    };
    let tol = opts.zero_tolerance * scale * target_sq_norm.max(0.0).sqrt().max(scale);
    active_set(&sys, opts.iteration_cap(p), tol).map(Array1::from)
}

/// [`simplex_ls`] in normal-equation form.
pub fn simplex_ls_gram(
    gram: ArrayView2<'_, f64>,
    rhs: ArrayView1<'_, f64>,
    target_sq_norm: f64,
    opts: &SolverOptions,
) -> Result<Array1<f64>> {
    let h2 = opts.huge_weight * opts.huge_weight;
    let g = gram.mapv(|v| v + h2);
    let r = rhs.mapv(|v| v + h2);
    nnls_gram(g.view(), r.view(), target_sq_norm + h2, opts)
}
