//! Archetypoid analysis: archetypes restricted to actual observations,
//! found by a BUILD phase seeded from an archetype fit and a SWAP local
//! search.

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archetypes::{self, fit_archetypes, prepare, AAModel, FitOptions, Prepared, Standardization};
use crate::basis::GramMatrix;
use crate::error::{Error, Result};
use crate::linalg::{simplex_ls_gram, SolverOptions};

/// Minimum relative RSS decrease for a swap to be accepted.
pub const SWAP_REL_THRESHOLD: f64 = 1e-9;

/// Where the initial archetypoid set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Candidate {
    /// Observations nearest to each archetype.
    CandNs,
    /// Observations with the largest alpha for each archetype.
    CandAlpha,
    /// Observations with the largest beta for each archetype.
    CandBeta,
    /// Supplied by the caller.
    Explicit,
}

impl Candidate {
    pub const BUILD: [Candidate; 3] = [Candidate::CandNs, Candidate::CandAlpha, Candidate::CandBeta];

    pub fn as_str(&self) -> &'static str {
        match self {
            Candidate::CandNs => "cand_ns",
            Candidate::CandAlpha => "cand_alpha",
            Candidate::CandBeta => "cand_beta",
            Candidate::Explicit => "explicit",
        }
    }
}

/// Outcome of the SWAP phase from one initial set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRun {
    pub which: Candidate,
    pub init: Vec<usize>,
    pub indices: Vec<usize>,
    pub rss: f64,
    pub swap_steps: usize,
}

/// A fitted archetypoid model. Indices are zero-based rows of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ADAModel {
    pub k: usize,
    pub indices: Vec<usize>,
    /// n x k mixture weights over the archetypoids.
    pub alpha: Array2<f64>,
    pub rss: f64,
    pub init_used: Candidate,
    pub swap_steps: usize,
    /// RSS trajectory of the accepted swaps, starting at the initial set.
    pub rss_path: Vec<f64>,
    /// RSS of the archetype fit that seeded the BUILD phase.
    pub aa_rss: Option<f64>,
    pub candidates: Vec<CandidateRun>,
    pub standardization: Option<Standardization>,
}

/// Ranks observations for archetype `j`; best first, ties by lowest index.
fn ranked(scores: impl Iterator<Item = f64>, descending: bool) -> Vec<usize> {
    let s: Vec<f64> = scores.collect();
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = if descending { s[b].total_cmp(&s[a]) } else { s[a].total_cmp(&s[b]) };
        ord.then(a.cmp(&b))
    });
    idx
}

/// Initial archetypoid set derived from a fitted archetype model. When two
/// archetypes pick the same observation the later one falls back to its
/// next-best choice.
pub fn build_candidates(
    x: ArrayView2<'_, f64>,
    aa: &AAModel,
    which: Candidate,
    metric: Option<&GramMatrix>,
) -> Result<Vec<usize>> {
    let n = x.nrows();
    if aa.alpha.nrows() != n || aa.beta.ncols() != n || aa.archetypes.ncols() != x.ncols() {
        return Err(Error::Argument(format!(
            "archetype model (alpha {:?}, archetypes {:?}) does not match data {:?}",
            aa.alpha.dim(),
            aa.archetypes.dim(),
            x.dim()
        )));
    }
    let data = match &aa.standardization {
        Some(s) => s.apply(x),
        None => x.to_owned(),
    };
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(aa.k);
    for j in 0..aa.k {
        let order = match which {
            Candidate::CandNs => {
                let z = aa.archetypes.row(j);
                let d = data.rows().into_iter().map(|r| {
                    let diff = &r - &z;
                    match metric {
                        None => diff.dot(&diff),
                        Some(w) => diff.dot(&w.values.dot(&diff)),
                    }
                });
                ranked(d, false)
            }
            Candidate::CandAlpha => ranked(aa.alpha.column(j).iter().copied(), true),
            Candidate::CandBeta => ranked(aa.beta.row(j).iter().copied(), true),
            Candidate::Explicit => {
                return Err(Error::Argument("explicit candidates are supplied, not built".into()))
            }
        };
        let pick = order.into_iter().find(|&i| !taken[i]).ok_or_else(|| {
            Error::Argument(format!("cannot pick {} distinct observations from {n}", aa.k))
        })?;
        taken[pick] = true;
        out.push(pick);
    }
    Ok(out)
}

/// RSS of approximating every row by a simplex mixture of the rows in `set`,
/// in the prepared coordinates. Returns alpha alongside.
fn evaluate_set(p: &Prepared, set: &[usize], solver: &SolverOptions) -> Result<(Array2<f64>, f64)> {
    let n = p.gram.nrows();
    let k = set.len();
    let sub = Array2::from_shape_fn((k, k), |(a, b)| p.gram[[set[a], set[b]]]);
    let mut alpha = Array2::zeros((n, k));
    let mut total = 0.0;
    for i in 0..n {
        let cross = Array1::from_shape_fn(k, |a| p.gram[[set[a], i]]);
        let w = if k == 1 {
            Array1::ones(1)
        } else {
            simplex_ls_gram(sub.view(), cross.view(), p.gram[[i, i]], solver)?
        };
        let r = p.gram[[i, i]] - 2.0 * w.dot(&cross) + w.dot(&sub.dot(&w));
        total += r.max(0.0);
        alpha.row_mut(i).assign(&w);
    }
    Ok((alpha, total))
}

fn exact_rss(p: &Prepared, set: &[usize], alpha: &Array2<f64>) -> f64 {
    let basis = p.y.select(ndarray::Axis(0), set);
    let resid = &p.y - &alpha.dot(&basis);
    resid.iter().map(|v| v * v).sum::<f64>() * p.rss_factor
}

/// Final set, its weights, RSS, accepted swaps and the RSS after each.
type SwapOutcome = (Vec<usize>, Array2<f64>, f64, usize, Vec<f64>);

fn swap_prepared(
    p: &Prepared,
    init: &[usize],
    solver: &SolverOptions,
) -> Result<SwapOutcome> {
    let n = p.gram.nrows();
    let mut set = init.to_vec();
    let (mut alpha, mut cur) = evaluate_set(p, &set, solver)?;
    let mut steps = 0;
    let mut path = vec![cur * p.rss_factor];
    loop {
        if cur <= 0.0 {
            break;
        }
        let in_set: Vec<bool> = (0..n).map(|i| set.contains(&i)).collect();
        let moves: Vec<(usize, usize)> = (0..set.len())
            .flat_map(|pos| (0..n).filter(|c| !in_set[*c]).map(move |c| (pos, c)))
            .collect();
        let scores: Vec<f64> = moves
            .par_iter()
            .map(|&(pos, c)| {
                let mut trial = set.clone();
                trial[pos] = c;
                evaluate_set(p, &trial, solver).map(|(_, r)| r)
            })
            .collect::<Result<_>>()?;
        // largest decrease; the scan order already gives lowest (pos, c) on ties
        let best = scores
            .iter()
            .enumerate()
            .min_by(|(ia, a), (ib, b)| a.total_cmp(b).then(ia.cmp(ib)))
            .map(|(i, &r)| (i, r));
        match best {
            Some((i, r)) if cur - r > SWAP_REL_THRESHOLD * cur => {
                set[moves[i].0] = moves[i].1;
                let (a, r) = evaluate_set(p, &set, solver)?;
                alpha = a;
                cur = r;
                steps += 1;
                path.push(cur * p.rss_factor);
            }
            _ => break,
        }
    }
    let rss = exact_rss(p, &set, &alpha);
    Ok((set, alpha, rss, steps, path))
}

/// Best-improvement single-exchange local search starting from `init`.
pub fn swap_optimize(
    x: ArrayView2<'_, f64>,
    init: &[usize],
    metric: Option<&GramMatrix>,
    solver: &SolverOptions,
) -> Result<ADAModel> {
    archetypes::validate_data(x, init.len().max(1))?;
    check_indices(init, x.nrows())?;
    solver.validate()?;
    let p = prepare(x, metric)?;
    let (indices, alpha, rss, swap_steps, rss_path) = swap_prepared(&p, init, solver)?;
    Ok(ADAModel {
        k: init.len(),
        candidates: vec![CandidateRun {
            which: Candidate::Explicit,
            init: init.to_vec(),
            indices: indices.clone(),
            rss,
            swap_steps,
        }],
        indices,
        alpha,
        rss,
        init_used: Candidate::Explicit,
        swap_steps,
        rss_path,
        aa_rss: None,
        standardization: None,
    })
}

fn check_indices(idx: &[usize], n: usize) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::Argument("need at least one index".into()));
    }
    for (a, &i) in idx.iter().enumerate() {
        if i >= n {
            return Err(Error::Argument(format!("index {i} out of range for {n} observations")));
        }
        if idx[..a].contains(&i) {
            return Err(Error::Argument(format!("index {i} repeated")));
        }
    }
    Ok(())
}

/// Archetypoid analysis: an archetype fit seeds three initial sets, each is
/// refined by SWAP, and the lowest-RSS result wins (ties go to the earlier
/// candidate in `cand_ns`, `cand_alpha`, `cand_beta` order).
pub fn fit_archetypoids(
    x: ArrayView2<'_, f64>,
    k: usize,
    opts: &FitOptions,
    metric: Option<&GramMatrix>,
) -> Result<ADAModel> {
    archetypes::validate_data(x, k)?;
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
    let inner = FitOptions { standardize: false, ..opts.clone() };
    let aa = fit_archetypes(data.view(), k, &inner, metric)?;
    let p = prepare(data.view(), metric)?;

    let mut runs: Vec<CandidateRun> = Vec::with_capacity(3);
    let mut best: Option<(usize, SwapOutcome)> = None;
    for which in Candidate::BUILD {
        let init = build_candidates(data.view(), &aa, which, metric)?;
        if let Some(prev) = runs.iter().find(|r| r.init == init) {
            let prev = prev.clone();
            runs.push(CandidateRun { which, ..prev });
            continue;
        }
        let outcome = swap_prepared(&p, &init, &opts.solver)?;
        let (indices, _, rss, steps, _) = &outcome;
        runs.push(CandidateRun { which, init, indices: indices.clone(), rss: *rss, swap_steps: *steps });
        if best.as_ref().is_none_or(|b| *rss < b.1 .2) {
            best = Some((runs.len() - 1, outcome));
        }
    }
    let (slot, (indices, alpha, rss, swap_steps, rss_path)) = best.unwrap();
    Ok(ADAModel {
        k,
        indices,
        alpha,
        rss,
        init_used: runs[slot].which,
        swap_steps,
        rss_path,
        aa_rss: Some(aa.rss),
        candidates: runs,
        standardization,
    })
}
