//! Functional and multivariate-functional archetype/archetypoid analysis.
//!
//! Curves are stored as basis coefficients. For coefficients `b_i` and Gram
//! matrix `W` the functional residual `Σ_i ||x_i - Σ_j α_ij z_j||²` equals
//! `Σ_i a_i' W a_i` with `a_i` the coefficient residual, so with `W = L L'`
//! the whole analysis is classical AA/ADA on the rows of `B L`. Alpha and
//! beta do not depend on the basis and are carried over unchanged.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::archetypes::{fit_archetypes, validate_ks, AAModel, FitOptions};
use crate::archetypoids::{fit_archetypoids, ADAModel};
use crate::basis::{fit_coefficients, gram_matrix, uniform_grid, BasisSpec, GramMatrix, SampledCurve};
use crate::error::{Error, Result};
use crate::linalg::{self, cholesky_spd_jittered};

/// Grid used by [`standardize`] when the caller has no preference.
pub const DEFAULT_STANDARDIZE_GRID: usize = 201;

/// `n` curves sharing one basis, as an `n x m` coefficient matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalDataset {
    pub basis: BasisSpec,
    pub coefficients: Array2<f64>,
    pub ids: Vec<String>,
    pub variable: String,
}

impl FunctionalDataset {
    pub fn new(basis: BasisSpec, coefficients: Array2<f64>, ids: Vec<String>, variable: impl Into<String>) -> Result<Self> {
        basis.validate()?;
        linalg::check_matrix("coefficients", coefficients.view())?;
        if coefficients.ncols() != basis.size() {
            return Err(Error::Argument(format!(
                "{} coefficient columns for a basis of size {}",
                coefficients.ncols(),
                basis.size()
            )));
        }
        if ids.len() != coefficients.nrows() {
            return Err(Error::Argument(format!(
                "{} ids for {} curves",
                ids.len(),
                coefficients.nrows()
            )));
        }
        Ok(Self { basis, coefficients, ids, variable: variable.into() })
    }

    /// Fits every curve separately by least squares in `basis`.
    pub fn from_curves(basis: BasisSpec, curves: &[SampledCurve], variable: impl Into<String>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::Data("no curves to fit".into()));
        }
        let mut coefficients = Array2::zeros((curves.len(), basis.size()));
        for (i, c) in curves.iter().enumerate() {
            coefficients.row_mut(i).assign(&fit_coefficients(&basis, c)?);
        }
        let ids = curves.iter().map(|c| c.id.clone()).collect();
        Self::new(basis, coefficients, ids, variable)
    }

    pub fn len(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.nrows() == 0
    }

    /// All curves on `grid`, one row per curve.
    pub fn evaluate(&self, grid: &[f64]) -> Result<Array2<f64>> {
        let phi = self.basis.design_matrix(grid)?;
        Ok(self.coefficients.dot(&phi.t()))
    }
}

/// Several functional variables observed on the same individuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateFunctionalDataset {
    pub components: Vec<FunctionalDataset>,
}

impl MultivariateFunctionalDataset {
    pub fn new(components: Vec<FunctionalDataset>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Argument("need at least one component".into()));
        };
        for c in &components[1..] {
            if c.ids != first.ids {
                let offending: Vec<String> = first
                    .ids
                    .iter()
                    .zip(&c.ids)
                    .filter(|(a, b)| a != b)
                    .map(|(a, b)| format!("{a}/{b}"))
                    .chain(if c.ids.len() != first.ids.len() {
                        Some(format!("{} vs {} ids", first.ids.len(), c.ids.len()))
                    } else {
                        None
                    })
                    .collect();
                return Err(Error::Alignment(format!(
                    "`{}` vs `{}`: {}",
                    first.variable,
                    c.variable,
                    offending.join(", ")
                )));
            }
        }
        Ok(Self { components })
    }

    pub fn ids(&self) -> &[String] {
        &self.components[0].ids
    }

    pub fn len(&self) -> usize {
        self.components[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.components[0].is_empty()
    }
}

/// Horizontally stacked coefficients and the block-diagonal Gram matrix.
pub fn stack_multivariate(mfd: &MultivariateFunctionalDataset) -> Result<(Array2<f64>, GramMatrix)> {
    let n = mfd.len();
    let total: usize = mfd.components.iter().map(|c| c.basis.size()).sum();
    let mut x = Array2::zeros((n, total));
    let mut w = Array2::zeros((total, total));
    let mut bases = Vec::with_capacity(mfd.components.len());
    let mut off = 0;
    for (ci, c) in mfd.components.iter().enumerate() {
        if c.ids != mfd.components[0].ids {
            return Err(Error::Alignment(format!("component {ci} (`{}`) has different ids", c.variable)));
        }
        let m = c.basis.size();
        x.slice_mut(s![.., off..off + m]).assign(&c.coefficients);
        let g = gram_matrix(&c.basis)?;
        w.slice_mut(s![off..off + m, off..off + m]).assign(&g.values);
        bases.push(c.basis.clone());
        off += m;
    }
    Ok((x, GramMatrix { values: w, bases }))
}

/// Anything that reduces to a coefficient matrix plus its Gram matrix.
pub trait CoefficientData {
    fn coefficient_problem(&self) -> Result<(Array2<f64>, GramMatrix)>;
    fn ids(&self) -> Vec<String>;
}

impl CoefficientData for FunctionalDataset {
    fn coefficient_problem(&self) -> Result<(Array2<f64>, GramMatrix)> {
        Ok((self.coefficients.clone(), gram_matrix(&self.basis)?))
    }

    fn ids(&self) -> Vec<String> {
        self.ids.clone()
    }
}

impl CoefficientData for MultivariateFunctionalDataset {
    fn coefficient_problem(&self) -> Result<(Array2<f64>, GramMatrix)> {
        stack_multivariate(self)
    }

    fn ids(&self) -> Vec<String> {
        self.components[0].ids.clone()
    }
}

/// Rows of `coefficients · L` with `W = L L'`.
pub fn metric_transform(coefficients: ArrayView2<'_, f64>, w: &GramMatrix) -> Result<Array2<f64>> {
    let (l, _) = cholesky_spd_jittered(w.values.view(), 6)?;
    Ok(coefficients.dot(&l))
}

/// Functional archetypes expressed in the dataset's basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalAAModel {
    /// The fit on transformed coefficients; `alpha`, `beta` and `rss` apply to
    /// the functions directly.
    pub model: AAModel,
    /// `beta · coefficients`, one row per archetype function.
    pub archetype_coefficients: Array2<f64>,
    pub bases: Vec<BasisSpec>,
}

impl FunctionalAAModel {
    pub fn rss(&self) -> f64 {
        self.model.rss
    }

    /// Archetype coefficients of the component using basis `c`.
    pub fn component_coefficients(&self, c: usize) -> Array2<f64> {
        let off: usize = self.bases[..c].iter().map(|b| b.size()).sum();
        let m = self.bases[c].size();
        self.archetype_coefficients.slice(s![.., off..off + m]).to_owned()
    }
}

fn check_functional_opts(opts: &FitOptions) -> Result<()> {
    if opts.standardize {
        return Err(Error::Argument(
            "functional fits do not standardize coefficient columns; standardize the curves instead".into(),
        ));
    }
    Ok(())
}

/// Functional archetype analysis.
pub fn faa<D: CoefficientData>(data: &D, k: usize, opts: &FitOptions) -> Result<FunctionalAAModel> {
    check_functional_opts(opts)?;
    let (coefficients, w) = data.coefficient_problem()?;
    let y = metric_transform(coefficients.view(), &w)?;
    let model = fit_archetypes(y.view(), k, opts, None)?;
    let archetype_coefficients = model.beta.dot(&coefficients);
    Ok(FunctionalAAModel { model, archetype_coefficients, bases: w.bases })
}

/// Functional archetypoid analysis; indices refer to curves of `data`.
pub fn fada<D: CoefficientData>(data: &D, k: usize, opts: &FitOptions) -> Result<ADAModel> {
    check_functional_opts(opts)?;
    let (coefficients, w) = data.coefficient_problem()?;
    let y = metric_transform(coefficients.view(), &w)?;
    fit_archetypoids(y.view(), k, opts, None)
}

/// Pointwise standardization across curves: each curve becomes
/// `(x_i(t) - mean(t)) / sd(t)` on an equally spaced grid (sample standard
/// deviation) and is refitted in the same basis.
pub fn standardize(fd: &FunctionalDataset, grid_size: usize) -> Result<FunctionalDataset> {
    let n = fd.len();
    if n < 2 {
        return Err(Error::Argument("standardization needs at least two curves".into()));
    }
    let m = fd.basis.size();
    if grid_size < m {
        return Err(Error::Argument(format!("grid of {grid_size} points is smaller than the basis ({m})")));
    }
    let (a, b) = fd.basis.domain;
    let grid = uniform_grid(a, b, grid_size);
    let values = fd.evaluate(&grid)?;
    let mean = values.mean_axis(Axis(0)).unwrap();
    let sd: Array1<f64> = values
        .axis_iter(Axis(1))
        .zip(mean.iter())
        .map(|(col, &mu)| (col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt())
        .collect();
    if let Some((j, _)) = sd.iter().enumerate().find(|(_, &v)| v < 1e-12) {
        return Err(Error::DegenerateVariance { t: grid[j] });
    }
    let scaled = (&values - &mean) / &sd;
    let mut coefficients = Array2::zeros((n, m));
    for (i, row) in scaled.rows().into_iter().enumerate() {
        let curve = SampledCurve { id: fd.ids[i].clone(), arguments: grid.clone(), values: row.to_vec() };
        coefficients.row_mut(i).assign(&fit_coefficients(&fd.basis, &curve)?);
    }
    FunctionalDataset::new(fd.basis.clone(), coefficients, fd.ids.clone(), fd.variable.clone())
}

/// One row of a k-scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScanRow {
    pub k: usize,
    pub indices: Vec<usize>,
    pub ids: Vec<String>,
    pub rss: f64,
}

/// Archetypoids for each `k` in `ks`. Solutions are not forced to nest.
pub fn k_scan_archetypoids<D: CoefficientData>(data: &D, ks: &[usize], opts: &FitOptions) -> Result<Vec<KScanRow>> {
    let ids = data.ids();
    validate_ks(ks, ids.len())?;
    ks.iter()
        .map(|&k| {
            let m = fada(data, k, opts)?;
            Ok(KScanRow {
                k,
                ids: m.indices.iter().map(|&i| ids[i].clone()).collect(),
                indices: m.indices,
                rss: m.rss,
            })
        })
        .collect()
}
