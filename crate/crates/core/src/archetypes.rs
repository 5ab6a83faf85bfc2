//! Classical archetype analysis by alternating constrained least squares.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::GramMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, cholesky_spd_jittered, simplex_ls_gram, SolverOptions};

/// Allowed RSS increase between consecutive sweeps of one run.
pub const DESCENT_SLACK: f64 = 1e-9;

/// Options shared by the archetype and archetypoid fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_outer_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    /// Center and scale every column before fitting; RSS is then reported in
    /// standardized units.
    pub standardize: bool,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_outer_iters: 100,
            rel_tol: 1e-6,
            seed: 0,
            standardize: false,
            solver: SolverOptions::default(),
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Argument("restarts must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Argument(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        self.solver.validate()
    }
}

/// Column centering and scaling applied before a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
}

impl Standardization {
    /// Sample (n - 1) standard deviations; constant columns keep scale 1.
    pub fn from_data(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows() as f64;
        let mean = x.mean_axis(Axis(0)).unwrap();
        let scale = x
            .axis_iter(Axis(1))
            .zip(mean.iter())
            .map(|(col, &mu)| {
                let ss: f64 = col.iter().map(|v| (v - mu).powi(2)).sum();
                let sd = if n > 1.0 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (&x - &self.mean) / &self.scale
    }
}

/// Per-sweep bookkeeping for one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub rss: f64,
    /// Largest `|row sum - 1|` over the rows of alpha.
    pub alpha_sum_defect: f64,
    /// Largest `|row sum - 1|` over the rows of beta.
    pub beta_sum_defect: f64,
    /// Smallest entry of alpha and beta.
    pub min_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub restart: usize,
    pub init: Vec<usize>,
    /// Entry 0 is the state after the first alpha update.
    pub sweeps: Vec<SweepRecord>,
    /// A sweep that would have raised the RSS was discarded and the run
    /// stopped on the previous state.
    pub stopped_on_ascent: bool,
}

/// A fitted archetype model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AAModel {
    pub k: usize,
    /// n x k mixture weights of the observations over the archetypes.
    pub alpha: Array2<f64>,
    /// k x n mixture weights of the archetypes over the observations.
    pub beta: Array2<f64>,
    /// k x m archetypes, `beta · X` in the (possibly standardized) input
    /// coordinates.
    pub archetypes: Array2<f64>,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Restart that produced this model.
    pub restart: usize,
    pub standardization: Option<Standardization>,
    pub traces: Vec<RunTrace>,
}

/// Residual sum of squares `Σ_i a_i M a_i'` with `a_i = x_i - (alpha Z)_i`
/// and `M` the metric (identity when absent).
pub fn rss(
    x: ArrayView2<'_, f64>,
    alpha: ArrayView2<'_, f64>,
    z: ArrayView2<'_, f64>,
    metric: Option<&GramMatrix>,
) -> Result<f64> {
    if alpha.nrows() != x.nrows() || alpha.ncols() != z.nrows() || z.ncols() != x.ncols() {
        return Err(Error::Argument(format!(
            "shape mismatch: X {:?}, alpha {:?}, Z {:?}",
            x.dim(),
            alpha.dim(),
            z.dim()
        )));
    }
    let resid = &x - &alpha.dot(&z);
    match metric {
        None => Ok(resid.iter().map(|v| v * v).sum()),
        Some(w) => {
            if w.size() != x.ncols() {
                return Err(Error::Argument(format!(
                    "metric is {}x{} but X has {} columns",
                    w.size(),
                    w.size(),
                    x.ncols()
                )));
            }
            let wa = resid.dot(&w.values);
            Ok((&wa * &resid).sum())
        }
    }
}

/// Data prepared for the identity-metric algorithm: rows mapped through the
/// Cholesky factor of the metric and scaled to unit RMS spread.
pub(crate) struct Prepared {
    /// Transformed, scaled rows.
    pub y: Array2<f64>,
    /// `y y'`.
    pub gram: Array2<f64>,
    /// Multiplier that maps RSS on `y` back to the caller's units.
    pub rss_factor: f64,
}

pub(crate) fn prepare(x: ArrayView2<'_, f64>, metric: Option<&GramMatrix>) -> Result<Prepared> {
    let transformed = match metric {
        None => x.to_owned(),
        Some(w) => {
            if w.size() != x.ncols() {
                return Err(Error::Argument(format!(
                    "metric has size {} but the data have {} columns",
                    w.size(),
                    x.ncols()
                )));
            }
            let (l, _) = cholesky_spd_jittered(w.values.view(), 6)?;
            x.dot(&l)
        }
    };
    // the penalty weight is meant for unit-scale data
    let centered = &transformed - &transformed.mean_axis(Axis(0)).unwrap();
    let spread = (centered.iter().map(|v| v * v).sum::<f64>() / x.nrows() as f64).sqrt();
    let s = if spread > 0.0 && spread.is_finite() { spread } else { 1.0 };
    let y = transformed / s;
    let gram = y.dot(&y.t());
    Ok(Prepared { y, gram, rss_factor: s * s })
}

pub(crate) fn validate_data(x: ArrayView2<'_, f64>, k: usize) -> Result<()> {
    linalg::check_matrix("X", x)?;
    let n = x.nrows();
    if k < 1 || k > n {
        return Err(Error::Argument(format!("k must lie in [1, {n}], got {k}")));
    }
    Ok(())
}

/// Mixture weights on the simplex for every row of `y` over the rows listed
/// in `z_gram`/`cross`: `z_gram = Z Z'` (k x k), `cross = Z Y'` (k x n).
pub(crate) fn alpha_step(
    y_sq_norms: &[f64],
    z_gram: ArrayView2<'_, f64>,
    cross: ArrayView2<'_, f64>,
    opts: &SolverOptions,
) -> Result<Array2<f64>> {
    let k = z_gram.nrows();
    let n = cross.ncols();
    if k == 1 {
        return Ok(Array2::ones((n, 1)));
    }
    let rows: Vec<Array1<f64>> = (0..n)
        .map(|i| simplex_ls_gram(z_gram, cross.column(i), y_sq_norms[i], opts))
        .collect::<Result<_>>()?;
    let mut alpha = Array2::zeros((n, k));
    for (i, r) in rows.into_iter().enumerate() {
        alpha.row_mut(i).assign(&r);
    }
    Ok(alpha)
}

fn sum_defect(m: ArrayView2<'_, f64>) -> f64 {
    m.rows().into_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
}

struct RunState {
    alpha: Array2<f64>,
    beta: Array2<f64>,
    rss: f64,
    iterations: usize,
    converged: bool,
    trace: RunTrace,
}

fn single_run(p: &Prepared, k: usize, restart: usize, init: Vec<usize>, opts: &FitOptions) -> Result<RunState> {
    let y = &p.y;
    let (n, _) = y.dim();
    let sq: Vec<f64> = (0..n).map(|i| p.gram[[i, i]]).collect();
    let mut beta = Array2::<f64>::zeros((k, n));
    for (j, &i) in init.iter().enumerate() {
        beta[[j, i]] = 1.0;
    }
    let mut z = beta.dot(y);
    let mut alpha = alpha_step(&sq, z.dot(&z.t()).view(), beta.dot(&p.gram).view(), &opts.solver)?;
    let mut resid = y - &alpha.dot(&z);
    let mut cur_rss: f64 = resid.iter().map(|v| v * v).sum();

    let record = |alpha: &Array2<f64>, beta: &Array2<f64>, rss: f64| SweepRecord {
        rss,
        alpha_sum_defect: sum_defect(alpha.view()),
        beta_sum_defect: sum_defect(beta.view()),
        min_weight: alpha.iter().chain(beta.iter()).fold(f64::INFINITY, |a, &v| a.min(v)),
    };
    let mut trace = RunTrace {
        restart,
        init,
        sweeps: vec![record(&alpha, &beta, cur_rss * p.rss_factor)],
        stopped_on_ascent: false,
    };
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_outer_iters {
        if cur_rss <= f64::EPSILON * sq.iter().sum::<f64>() {
            converged = true;
            break;
        }
        iterations += 1;
        let mut new_beta = beta.clone();
        let mut new_z = z.clone();
        let mut new_resid = resid.clone();
        // each archetype moved to its best position with the others held fixed
        for j in 0..k {
            let a = alpha.column(j);
            let weight = a.dot(&a);
            if weight <= 1e-12 {
                continue;
            }
            let target = &new_z.row(j) + &(new_resid.t().dot(&a) / weight);
            let rhs = y.dot(&target);
            let b = simplex_ls_gram(p.gram.view(), rhs.view(), target.dot(&target), &opts.solver)?;
            let zj = b.dot(y);
            let delta = &zj - &new_z.row(j);
            for i in 0..n {
                let aij = a[i];
                if aij != 0.0 {
                    new_resid.row_mut(i).scaled_add(-aij, &delta);
                }
            }
            new_beta.row_mut(j).assign(&b);
            new_z.row_mut(j).assign(&zj);
        }
        let new_alpha = alpha_step(
            &sq,
            new_z.dot(&new_z.t()).view(),
            new_beta.dot(&p.gram).view(),
            &opts.solver,
        )?;
        let new_resid = y - &new_alpha.dot(&new_z);
        let new_rss: f64 = new_resid.iter().map(|v| v * v).sum();

        if new_rss > cur_rss + DESCENT_SLACK / p.rss_factor {
            trace.stopped_on_ascent = true;
            converged = true;
            break;
        }
        let improvement = cur_rss - new_rss;
        alpha = new_alpha;
        beta = new_beta;
        z = new_z;
        resid = new_resid;
        cur_rss = new_rss;
        trace.sweeps.push(record(&alpha, &beta, cur_rss * p.rss_factor));
        if improvement <= opts.rel_tol * cur_rss.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(RunState { alpha, beta, rss: cur_rss * p.rss_factor, iterations, converged, trace })
}

/// Fits `k` archetypes to the rows of `x`.
///
/// With a `metric` the residual norm is the quadratic form of that Gram
/// matrix; the data are mapped through its Cholesky factor and the identity
/// metric algorithm runs on the result.
pub fn fit_archetypes(
    x: ArrayView2<'_, f64>,
    k: usize,
    opts: &FitOptions,
    metric: Option<&GramMatrix>,
) -> Result<AAModel> {
    validate_data(x, k)?;
    opts.validate()?;
    if opts.standardize && metric.is_some() {
        return Err(Error::Argument(
            "column standardization cannot be combined with a basis metric".into(),
        ));
    }
    let standardization = opts.standardize.then(|| Standardization::from_data(x));
    let data = match &standardization {
        Some(s) => s.apply(x),
        None => x.to_owned(),
    };
    let n = data.nrows();

    if k == 1 {
        let alpha = Array2::ones((n, 1));
        let beta = Array2::from_elem((1, n), 1.0 / n as f64);
        let archetypes = data.mean_axis(Axis(0)).unwrap().insert_axis(Axis(0));
        let value = rss(data.view(), alpha.view(), archetypes.view(), metric)?;
        let trace = RunTrace {
            restart: 0,
            init: vec![],
            sweeps: vec![SweepRecord { rss: value, alpha_sum_defect: 0.0, beta_sum_defect: sum_defect(beta.view()), min_weight: 1.0 / n as f64 }],
            stopped_on_ascent: false,
        };
        return Ok(AAModel {
            k,
            alpha,
            beta,
            archetypes,
            rss: value,
            iterations: 0,
            converged: true,
            restart: 0,
            standardization,
            traces: vec![trace],
        });
    }

    let prepared = prepare(data.view(), metric)?;
    let inits: Vec<Vec<usize>> = (0..opts.restarts)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            rand::seq::index::sample(&mut rng, n, k).into_vec()
        })
        .collect();
    let runs: Vec<RunState> = inits
        .into_par_iter()
        .enumerate()
        .map(|(r, init)| single_run(&prepared, k, r, init, opts))
        .collect::<Result<_>>()?;

    let best = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.rss.total_cmp(&b.rss).then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .unwrap();
    let traces = runs.iter().map(|r| r.trace.clone()).collect();
    let run = runs.into_iter().nth(best).unwrap();
    let archetypes = run.beta.dot(&data);
    Ok(AAModel {
        k,
        alpha: run.alpha,
        beta: run.beta,
        archetypes,
        rss: run.rss,
        iterations: run.iterations,
        converged: run.converged,
        restart: best,
        standardization,
        traces,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowRow {
    pub k: usize,
    pub rss: Option<f64>,
    pub converged: bool,
    pub restarts_used: usize,
    pub error: Option<String>,
}

/// RSS as a function of `k`, for choosing the model order by eye.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowReport {
    pub rows: Vec<ElbowRow>,
}

pub(crate) fn validate_ks(ks: &[usize], n: usize) -> Result<()> {
    if ks.is_empty() {
        return Err(Error::Argument("empty k sequence".into()));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("k values must be strictly increasing".into()));
    }
    if let Some(k) = ks.iter().find(|&&k| k < 1 || k > n) {
        return Err(Error::Argument(format!("k = {k} outside [1, {n}]")));
    }
    Ok(())
}

/// Best archetype RSS for every `k` in `ks`. Fit failures are recorded per
/// row instead of aborting the scan.
pub fn elbow_scan(
    x: ArrayView2<'_, f64>,
    ks: &[usize],
    opts: &FitOptions,
    metric: Option<&GramMatrix>,
) -> Result<ElbowReport> {
    linalg::check_matrix("X", x)?;
    validate_ks(ks, x.nrows())?;
    let rows = ks
        .iter()
        .map(|&k| match fit_archetypes(x, k, opts, metric) {
            Ok(m) => ElbowRow {
                k,
                rss: Some(m.rss),
                converged: m.converged,
                restarts_used: m.traces.len(),
                error: None,
            },
            Err(e) => ElbowRow { k, rss: None, converged: false, restarts_used: 0, error: Some(e.to_string()) },
        })
        .collect();
    Ok(ElbowReport { rows })
}

/// Column means of `x`.
pub fn column_mean(x: ArrayView2<'_, f64>) -> Array1<f64> {
    x.mean_axis(Axis(0)).unwrap()
}

/// Total squared distance of the rows of `x` from their mean.
pub fn total_variation(x: ArrayView2<'_, f64>) -> f64 {
    let mu = column_mean(x);
    x.rows().into_iter().map(|r| (&r - &mu).mapv(|v| v * v).sum()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn planted(generators: &Array2<f64>, reps: usize) -> Array2<f64> {
        let (g, m) = generators.dim();
        Array2::from_shape_fn((g * reps, m), |(i, j)| generators[[i % g, j]])
    }

    #[test]
    fn k1_is_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((17, 4), |_| rng.gen_range(-3.0..3.0));
        let m = fit_archetypes(x.view(), 1, &FitOptions::default(), None).unwrap();
        let mu = column_mean(x.view());
        assert!((&m.archetypes.row(0) - &mu).iter().all(|d| d.abs() < 1e-12));
        assert!((m.rss - total_variation(x.view())).abs() < 1e-9);
    }

    #[test]
    fn planted_generators_are_recovered() {
        let gens = array![[0.0, 0.0], [4.0, 0.0], [4.0, 3.0], [0.0, 3.0]];
        let x = planted(&gens, 10);
        let m = fit_archetypes(x.view(), 4, &FitOptions::default(), None).unwrap();
        assert!(m.rss <= 1e-8, "rss {}", m.rss);
        for g in gens.rows() {
            let close = m.archetypes.rows().into_iter().any(|z| (&z - &g).iter().all(|d| d.abs() < 1e-4));
            assert!(close, "generator {g} not recovered: {}", m.archetypes);
        }
    }

    #[test]
    fn argument_errors() {
        let x = Array2::<f64>::zeros((3, 2));
        assert!(matches!(fit_archetypes(x.view(), 0, &FitOptions::default(), None), Err(Error::Argument(_))));
        assert!(matches!(fit_archetypes(x.view(), 4, &FitOptions::default(), None), Err(Error::Argument(_))));
        let mut bad = x.clone();
        bad[[1, 1]] = f64::NAN;
        assert!(matches!(fit_archetypes(bad.view(), 2, &FitOptions::default(), None), Err(Error::Data(_))));
    }

    #[test]
    fn rss_examples() {
        let x = array![[1.0, 0.0]];
        let alpha = array![[1.0]];
        let z = array![[0.0, 0.0]];
        assert_eq!(rss(x.view(), alpha.view(), z.view(), None).unwrap(), 1.0);
        assert_eq!(rss(x.view(), alpha.view(), x.view(), None).unwrap(), 0.0);
        assert!(rss(x.view(), alpha.view(), array![[0.0]].view(), None).is_err());
    }

    #[test]
    fn sweeps_descend_and_stay_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Array2::from_shape_fn((40, 3), |_| rng.gen_range(-1.0..1.0));
        let m = fit_archetypes(x.view(), 3, &FitOptions::default(), None).unwrap();
        assert_eq!(m.traces.len(), 10);
        for t in &m.traces {
            for w in t.sweeps.windows(2) {
                assert!(w[1].rss <= w[0].rss + DESCENT_SLACK);
            }
            for s in &t.sweeps {
                assert!(s.min_weight >= 0.0);
                assert!(s.alpha_sum_defect <= 1e-4 && s.beta_sum_defect <= 1e-4);
            }
        }
        let z = m.beta.dot(&x);
        assert!((&z - &m.archetypes).iter().all(|d| d.abs() < 1e-8));
        let again = rss(x.view(), m.alpha.view(), m.archetypes.view(), None).unwrap();
        assert!((again - m.rss).abs() <= 1e-6 * m.rss);
    }

    #[test]
    fn standardized_fit_reports_standardized_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((30, 2), |(_, j)| rng.gen_range(0.0..1.0) * 10f64.powi(j as i32 * 3));
        let opts = FitOptions { standardize: true, ..Default::default() };
        let m = fit_archetypes(x.view(), 2, &opts, None).unwrap();
        let s = m.standardization.as_ref().unwrap();
        let xs = s.apply(x.view());
        let again = rss(xs.view(), m.alpha.view(), m.archetypes.view(), None).unwrap();
        assert!((again - m.rss).abs() <= 1e-6 * m.rss);
    }

    #[test]
    fn elbow_single_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Array2::from_shape_fn((12, 3), |_| rng.gen_range(-1.0..1.0));
        let r = elbow_scan(x.view(), &[1], &FitOptions::default(), None).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!((r.rows[0].rss.unwrap() - total_variation(x.view())).abs() < 1e-9);
        assert!(elbow_scan(x.view(), &[2, 2], &FitOptions::default(), None).is_err());
        assert!(elbow_scan(x.view(), &[13], &FitOptions::default(), None).is_err());
    }
}
