//! Basis systems on an interval: evaluation, least-squares curve fitting and
//! Gram matrices of pairwise `L²` inner products.

pub mod quadrature;

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Family of basis functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BasisKind {
    /// Constant, then `sin`/`cos` pairs of increasing harmonic. An even size
    /// ends on the sine of harmonic `size / 2`.
    Fourier { size: usize, period: f64 },
    /// Clamped B-splines of the given order (degree + 1).
    Bspline { order: usize, interior_knots: Vec<f64> },
}

/// A basis system `B_1, ..., B_m` on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub domain: (f64, f64),
    #[serde(flatten)]
    pub kind: BasisKind,
}

impl BasisSpec {
    /// Fourier basis scaled to be orthonormal on `[a, b]`.
    pub fn fourier(a: f64, b: f64, size: usize) -> Result<Self> {
        Self::fourier_with_period(a, b, size, b - a)
    }

    pub fn fourier_with_period(a: f64, b: f64, size: usize, period: f64) -> Result<Self> {
        let spec = Self { domain: (a, b), kind: BasisKind::Fourier { size, period } };
        spec.validate()?;
        Ok(spec)
    }

    /// `size` B-splines of `order` with equally spaced interior knots.
    pub fn bspline(a: f64, b: f64, size: usize, order: usize) -> Result<Self> {
        if order == 0 || size < order {
            return Err(Error::Argument(format!(
                "bspline needs size >= order >= 1, got size {size}, order {order}"
            )));
        }
        let n_interior = size - order;
        let interior = (1..=n_interior)
            .map(|i| a + (b - a) * i as f64 / (n_interior + 1) as f64)
            .collect();
        Self::bspline_with_knots(a, b, order, interior)
    }

    /// B-splines with the given (nondecreasing, strictly inside) interior
    /// knots; the end knots are clamped at `a` and `b`.
    pub fn bspline_with_knots(a: f64, b: f64, order: usize, interior_knots: Vec<f64>) -> Result<Self> {
        let spec = Self { domain: (a, b), kind: BasisKind::Bspline { order, interior_knots } };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Argument(format!("invalid domain [{a}, {b}]")));
        }
        match &self.kind {
            BasisKind::Fourier { size, period } => {
                if *size == 0 {
                    return Err(Error::Argument("fourier basis needs size >= 1".into()));
                }
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::Argument(format!("invalid fourier period {period}")));
                }
            }
            BasisKind::Bspline { order, interior_knots } => {
                if *order == 0 {
                    return Err(Error::Argument("bspline order must be >= 1".into()));
                }
                if interior_knots.iter().any(|&k| !(k > a && k < b)) {
                    return Err(Error::Argument("interior knots must lie strictly inside the domain".into()));
                }
                if interior_knots.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::Argument("interior knots must be nondecreasing".into()));
                }
                // a knot of multiplicity > order would disconnect the basis
                let mut run = 1;
                for w in interior_knots.windows(2) {
                    run = if w[1] == w[0] { run + 1 } else { 1 };
                    if run > *order {
                        return Err(Error::Argument("interior knot multiplicity exceeds order".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of basis functions `m`.
    pub fn size(&self) -> usize {
        match &self.kind {
            BasisKind::Fourier { size, .. } => *size,
            BasisKind::Bspline { order, interior_knots } => order + interior_knots.len(),
        }
    }

    /// Whether the Gram matrix is exactly the identity.
    pub fn is_orthonormal(&self) -> bool {
        match &self.kind {
            BasisKind::Fourier { period, .. } => {
                let len = self.domain.1 - self.domain.0;
                (period - len).abs() <= 1e-12 * len
            }
            BasisKind::Bspline { .. } => false,
        }
    }

    /// Full clamped knot vector (B-splines only).
    pub fn knot_vector(&self) -> Option<Vec<f64>> {
        match &self.kind {
            BasisKind::Bspline { order, interior_knots } => {
                let (a, b) = self.domain;
                let mut k = vec![a; *order];
                k.extend_from_slice(interior_knots);
                k.extend(std::iter::repeat_n(b, *order));
                Some(k)
            }
            _ => None,
        }
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        let (a, b) = self.domain;
        if t.is_finite() && t >= a && t <= b {
            Ok(())
        } else {
            Err(Error::Domain { t, a, b })
        }
    }

    /// `(B_1(t), ..., B_m(t))`.
    pub fn evaluate(&self, t: f64) -> Result<Array1<f64>> {
        self.check_domain(t)?;
        let mut out = Array1::zeros(self.size());
        self.evaluate_into(t, out.as_slice_mut().unwrap());
        Ok(out)
    }

    fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        match &self.kind {
            BasisKind::Fourier { size, period } => {
                let len = self.domain.1 - self.domain.0;
                let omega = 2.0 * PI / period;
                let x = t - self.domain.0;
                out[0] = 1.0 / len.sqrt();
                let c = (2.0 / len).sqrt();
                for h in 1..*size {
                    let harmonic = h.div_ceil(2) as f64;
                    out[h] = if h % 2 == 1 {
                        c * (harmonic * omega * x).sin()
                    } else {
                        c * (harmonic * omega * x).cos()
                    };
                }
            }
            BasisKind::Bspline { order, .. } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let knots = self.knot_vector().unwrap();
                let (span, vals) = bspline_nonzero(&knots, *order, t);
                for (r, v) in vals.into_iter().enumerate() {
                    out[span + 1 - order + r] = v;
                }
            }
        }
    }

    /// Basis functions evaluated on `grid`, one row per grid point.
    pub fn design_matrix(&self, grid: &[f64]) -> Result<Array2<f64>> {
        let mut phi = Array2::zeros((grid.len(), self.size()));
        for (i, &t) in grid.iter().enumerate() {
            self.check_domain(t)?;
            self.evaluate_into(t, phi.row_mut(i).into_slice().unwrap());
        }
        Ok(phi)
    }
}

/// Cox–de Boor: index `i` of the knot span containing `t` and the `order`
/// non-zero values `B_{i-order+1}, ..., B_i` at `t`.
fn bspline_nonzero(knots: &[f64], order: usize, t: f64) -> (usize, Vec<f64>) {
    let n_basis = knots.len() - order;
    // last non-empty span for the right end point
    let span = if t >= knots[n_basis] {
        (order - 1..n_basis).rev().find(|&i| knots[i] < knots[i + 1]).unwrap()
    } else {
        let mut i = order - 1;
        while !(knots[i] <= t && t < knots[i + 1]) {
            i += 1;
        }
        i
    };
    let mut vals = vec![0.0; order];
    vals[0] = 1.0;
    let mut left = vec![0.0; order];
    let mut right = vec![0.0; order];
    for j in 1..order {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = vals[r] / (right[r + 1] + left[j - r]);
            vals[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        vals[j] = saved;
    }
    (span, vals)
}

/// Gram matrix `W[h1][h2] = ∫ B_h1 B_h2` over the basis domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    pub values: Array2<f64>,
    /// Bases that produced the matrix; several for a block-diagonal metric
    /// over stacked components.
    pub bases: Vec<BasisSpec>,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.values.nrows()
    }
}

/// Computes the Gram matrix of `spec`. Orthonormal Fourier bases give the
/// identity; B-splines use Gauss–Legendre with `order` nodes per knot span,
/// which is exact for the piecewise polynomial integrand.
pub fn gram_matrix(spec: &BasisSpec) -> Result<GramMatrix> {
    spec.validate()?;
    let m = spec.size();
    if spec.is_orthonormal() {
        return Ok(GramMatrix { values: Array2::eye(m), bases: vec![spec.clone()] });
    }
    let mut w = Array2::<f64>::zeros((m, m));
    let mut vals = vec![0.0; m];
    let accumulate = |t: f64, wt: f64, w: &mut Array2<f64>, vals: &mut Vec<f64>| {
        spec.evaluate_into(t, vals);
        for i in 0..m {
            if vals[i] == 0.0 {
                continue;
            }
            for j in i..m {
                w[[i, j]] += wt * vals[i] * vals[j];
            }
        }
    };
    match &spec.kind {
        BasisKind::Bspline { order, .. } => {
            let knots = spec.knot_vector().unwrap();
            for span in knots.windows(2).filter(|s| s[0] < s[1]) {
                for (t, wt) in quadrature::gauss_legendre_on(*order, span[0], span[1]) {
                    accumulate(t, wt, &mut w, &mut vals);
                }
            }
        }
        BasisKind::Fourier { size, period } => {
            // non-matching period: composite rule fine enough for the top harmonic
            let (a, b) = spec.domain;
            let cycles = ((b - a) / period).ceil().max(1.0) as usize;
            let panels = 4 * cycles * (size / 2 + 1);
            let hw = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * hw;
                for (t, wt) in quadrature::gauss_legendre_on(16, lo, lo + hw) {
                    accumulate(t, wt, &mut w, &mut vals);
                }
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            w[[i, j]] = w[[j, i]];
        }
    }
    Ok(GramMatrix { values: w, bases: vec![spec.clone()] })
}

/// Observations of one curve at increasing argument values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    pub id: String,
    pub arguments: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledCurve {
    pub fn new(id: impl Into<String>, arguments: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if arguments.len() != values.len() {
            return Err(Error::Data(format!(
                "curve `{id}`: {} arguments but {} values",
                arguments.len(),
                values.len()
            )));
        }
        if arguments.is_empty() {
            return Err(Error::Data(format!("curve `{id}` has no observations")));
        }
        if arguments.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("curve `{id}` has non-finite entries")));
        }
        if arguments.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Data(format!("curve `{id}`: arguments must be strictly increasing")));
        }
        Ok(Self { id, arguments, values })
    }

    pub fn len(&self) -> usize {
        self.arguments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty()
    }
}

/// Ordinary least-squares basis coefficients for `curve`.
pub fn fit_coefficients(spec: &BasisSpec, curve: &SampledCurve) -> Result<Array1<f64>> {
    let m = spec.size();
    if curve.len() < m {
        return Err(Error::UnderdeterminedFit {
            id: curve.id.clone(),
            reason: format!("{} points for {m} basis functions", curve.len()),
        });
    }
    let phi = spec.design_matrix(&curve.arguments)?;
    linalg::lstsq(phi, &curve.values).ok_or_else(|| Error::UnderdeterminedFit {
        id: curve.id.clone(),
        reason: "design matrix is rank deficient".into(),
    })
}

/// `b' B(t)` at every grid point.
pub fn evaluate_curve(spec: &BasisSpec, coefficients: ArrayView1<'_, f64>, grid: &[f64]) -> Result<Vec<f64>> {
    if coefficients.len() != spec.size() {
        return Err(Error::Argument(format!(
            "{} coefficients for a basis of size {}",
            coefficients.len(),
            spec.size()
        )));
    }
    Ok(spec.design_matrix(grid)?.dot(&coefficients).to_vec())
}

/// `n` equally spaced points covering `[a, b]`, end points included.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => {
            let mut g: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
            g[n - 1] = b;
            g
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    /// Direct recursive Cox–de Boor, used as an independent oracle.
    fn cox_de_boor(knots: &[f64], i: usize, order: usize, t: f64, last: bool) -> f64 {
        if order == 1 {
            let inside = knots[i] <= t && t < knots[i + 1];
            let at_end = last && t == knots[i + 1] && knots[i] < knots[i + 1]
                && knots[i + 1..].iter().all(|&k| k == knots[i + 1]);
            return if inside || at_end { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = knots[i + order - 1] - knots[i];
        if d1 > 0.0 {
            v += (t - knots[i]) / d1 * cox_de_boor(knots, i, order - 1, t, last);
        }
        let d2 = knots[i + order] - knots[i + 1];
        if d2 > 0.0 {
            v += (knots[i + order] - t) / d2 * cox_de_boor(knots, i + 1, order - 1, t, last);
        }
        v
    }

    #[test]
    fn partition_of_unity() {
        let spec = BasisSpec::bspline(0.0, 3.0, 9, 4).unwrap();
        for t in uniform_grid(0.0, 3.0, 301) {
            let v = spec.evaluate(t).unwrap();
            assert!(v.iter().all(|&x| x >= 0.0));
            assert!((v.sum() - 1.0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn hat_functions() {
        let spec = BasisSpec::bspline_with_knots(0.0, 1.0, 2, vec![0.5]).unwrap();
        assert_eq!(spec.size(), 3);
        let v = spec.evaluate(0.25).unwrap();
        assert!((v - Array1::from(vec![0.5, 0.5, 0.0])).iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn matches_recursive_definition() {
        let spec = BasisSpec::bspline_with_knots(0.0, 1.0, 4, vec![0.2, 0.2, 0.55, 0.9]).unwrap();
        let knots = spec.knot_vector().unwrap();
        for t in uniform_grid(0.0, 1.0, 97) {
            let v = spec.evaluate(t).unwrap();
            for h in 0..spec.size() {
                let o = cox_de_boor(&knots, h, 4, t, true);
                assert!((v[h] - o).abs() < 1e-13, "t={t} h={h}: {} vs {o}", v[h]);
            }
        }
    }

    #[test]
    fn fourier_constant_term() {
        let spec = BasisSpec::fourier(0.0, 12.0, 12).unwrap();
        for t in [0.0, 3.3, 12.0] {
            assert!((spec.evaluate(t).unwrap()[0] - 1.0 / 12f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn outside_domain_is_an_error() {
        let spec = BasisSpec::bspline(0.0, 1.0, 5, 3).unwrap();
        assert!(matches!(spec.evaluate(1.5), Err(Error::Domain { .. })));
        assert!(evaluate_curve(&spec, Array1::zeros(5).view(), &[-0.1]).is_err());
    }

    #[test]
    fn fourier_gram_is_identity() {
        for m in [1, 4, 7, 12, 13] {
            let g = gram_matrix(&BasisSpec::fourier(-1.0, 2.0, m).unwrap()).unwrap();
            assert_eq!(g.values, Array2::<f64>::eye(m));
        }
    }

    #[test]
    fn fourier_gram_numerical_matches_identity() {
        // force the quadrature path with a period that equals the domain up to roundoff
        let spec = BasisSpec {
            domain: (0.0, 2.0),
            kind: BasisKind::Fourier { size: 7, period: 2.0 * (1.0 + 1e-9) },
        };
        let g = gram_matrix(&spec).unwrap();
        assert!((g.values - Array2::<f64>::eye(7)).iter().all(|d| d.abs() < 1e-6));
    }

    #[test]
    fn bspline_gram_sums_to_length() {
        for (m, order) in [(8, 4), (5, 2), (12, 3), (32, 4)] {
            let spec = BasisSpec::bspline(1.0, 3.5, m, order).unwrap();
            let g = gram_matrix(&spec).unwrap();
            assert!((g.values.sum() - 2.5).abs() < 1e-10);
            assert_eq!(g.values, g.values.t());
        }
    }

    #[test]
    fn fits_constant_with_unit_coefficients() {
        let spec = BasisSpec::bspline(0.0, 1.0, 7, 4).unwrap();
        let args = uniform_grid(0.0, 1.0, 25);
        let curve = SampledCurve::new("c", args.clone(), vec![1.0; 25]).unwrap();
        let b = fit_coefficients(&spec, &curve).unwrap();
        assert!(b.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let back = evaluate_curve(&spec, b.view(), &args).unwrap();
        assert!(back.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn fits_harmonic_exactly() {
        let spec = BasisSpec::fourier(0.0, 2.0, 12).unwrap();
        let args = uniform_grid(0.0, 2.0, 50);
        let vals: Vec<f64> = args.iter().map(|t| (2.0 * PI * t / 2.0).sin()).collect();
        let curve = SampledCurve::new("s", args.clone(), vals.clone()).unwrap();
        let b = fit_coefficients(&spec, &curve).unwrap();
        let back = evaluate_curve(&spec, b.view(), &args).unwrap();
        for (x, y) in back.iter().zip(&vals) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn fits_cubic_exactly() {
        let spec = BasisSpec::bspline_with_knots(-1.0, 2.0, 4, vec![-0.3, 0.1, 0.15, 1.2]).unwrap();
        let args = uniform_grid(-1.0, 2.0, 60);
        let f = |t: f64| 0.5 - 2.0 * t + 0.7 * t * t - 0.3 * t * t * t;
        let vals: Vec<f64> = args.iter().map(|&t| f(t)).collect();
        let curve = SampledCurve::new("p", args.clone(), vals.clone()).unwrap();
        let b = fit_coefficients(&spec, &curve).unwrap();
        let back = evaluate_curve(&spec, b.view(), &args).unwrap();
        for (x, y) in back.iter().zip(&vals) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn underdetermined_fits_are_named() {
        let spec = BasisSpec::bspline(0.0, 1.0, 6, 4).unwrap();
        let short = SampledCurve::new("short", vec![0.1, 0.2, 0.3], vec![1.0, 2.0, 3.0]).unwrap();
        match fit_coefficients(&spec, &short) {
            Err(Error::UnderdeterminedFit { id, .. }) => assert_eq!(id, "short"),
            other => panic!("{other:?}"),
        }
        // enough points, but all inside one knot span
        let args: Vec<f64> = (0..10).map(|i| 0.01 + 0.01 * i as f64).collect();
        let clumped = SampledCurve::new("clumped", args, vec![0.0; 10]).unwrap();
        assert!(matches!(
            fit_coefficients(&spec, &clumped),
            Err(Error::UnderdeterminedFit { .. })
        ));
    }

    #[test]
    fn zero_coefficients_give_zero_curve() {
        let spec = BasisSpec::fourier(0.0, 1.0, 5).unwrap();
        let v = evaluate_curve(&spec, Array1::zeros(5).view(), &uniform_grid(0.0, 1.0, 11)).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_coefficient_matches_recursion() {
        let spec = BasisSpec::bspline(0.0, 1.0, 8, 4).unwrap();
        let knots = spec.knot_vector().unwrap();
        let mut b = Array1::zeros(8);
        b[3] = 1.0;
        let grid = uniform_grid(knots[3], knots[7], 41);
        let v = evaluate_curve(&spec, b.view(), &grid).unwrap();
        for (t, x) in grid.iter().zip(v) {
            assert!((x - cox_de_boor(&knots, 3, 4, *t, true)).abs() < 1e-13);
        }
    }
}
