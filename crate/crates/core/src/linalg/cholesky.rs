use ndarray::{Array2, ArrayView2};

use super::{check_matrix, max_abs};
use crate::error::{Error, Result};

/// Lower-triangular `L` with `W = L L'`.
pub fn cholesky_spd(w: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_matrix("W", w)?;
    let m = w.nrows();
    if w.ncols() != m {
        return Err(Error::Argument(format!("W must be square, got {:?}", w.dim())));
    }
    let scale = max_abs(w.iter());
    for i in 0..m {
        for j in 0..i {
            if (w[[i, j]] - w[[j, i]]).abs() > 1e-10 * scale {
                return Err(Error::Argument(format!(
                    "W is not symmetric at ({i}, {j}): {} vs {}",
                    w[[i, j]],
                    w[[j, i]]
                )));
            }
        }
    }

    let mut l = Array2::<f64>::zeros((m, m));
    for j in 0..m {
        let mut d = w[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in j + 1..m {
            // lower triangle read from the symmetrized entry
            let mut s = 0.5 * (w[[i, j]] + w[[j, i]]);
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Retries [`cholesky_spd`] with a growing diagonal shift when `W` is only
/// semi-definite in floating point. Returns the factor and the shift used.
pub fn cholesky_spd_jittered(w: ArrayView2<'_, f64>, max_tries: usize) -> Result<(Array2<f64>, f64)> {
    match cholesky_spd(w) {
        Ok(l) => return Ok((l, 0.0)),
        Err(Error::NotPositiveDefinite { .. }) => {}
        Err(e) => return Err(e),
    }
    let m = w.nrows() as f64;
    let mean_diag = w.diag().sum() / m;
    let mut shift = 1e-12 * mean_diag.abs().max(f64::MIN_POSITIVE);
    let mut last = None;
    for _ in 0..max_tries {
        let mut shifted = w.to_owned();
        shifted.diag_mut().mapv_inplace(|v| v + shift);
        match cholesky_spd(shifted.view()) {
            Ok(l) => return Ok((l, shift)),
            Err(e @ Error::NotPositiveDefinite { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
        shift *= 10.0;
    }
    Err(last.unwrap_or(Error::NotPositiveDefinite { index: 0, pivot: 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_and_diagonal() {
        let l = cholesky_spd(Array2::<f64>::eye(4).view()).unwrap();
        assert_eq!(l, Array2::<f64>::eye(4));
        let l = cholesky_spd(array![[4.0, 0.0], [0.0, 9.0]].view()).unwrap();
        assert_eq!(l, array![[2.0, 0.0], [0.0, 3.0]]);
    }

    #[test]
    fn reports_failing_pivot() {
        let w = array![[1.0, 2.0], [2.0, 1.0]];
        match cholesky_spd(w.view()) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let w = array![[1.0, 0.5], [0.0, 1.0]];
        assert!(matches!(cholesky_spd(w.view()), Err(Error::Argument(_))));
    }

    #[test]
    fn jitter_rescues_semidefinite() {
        let w = array![[1.0, 1.0], [1.0, 1.0]];
        let (l, shift) = cholesky_spd_jittered(w.view(), 8).unwrap();
        assert!(shift > 0.0);
        let back = l.dot(&l.t());
        assert!((back - w).iter().all(|d| d.abs() < 1e-3));
    }
}
