//! Dense kernels: non-negative and simplex-constrained least squares,
//! Cholesky factorization and a Householder least-squares solver.

mod cholesky;
mod nnls;
mod qr;

pub use cholesky::{cholesky_spd, cholesky_spd_jittered};
pub use nnls::{nnls_gram, nnls_solve, simplex_ls, simplex_ls_gram, SolverOptions};
pub use qr::lstsq;

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Checks the shape and finiteness requirements shared by every matrix input.
pub fn check_matrix(name: &str, m: ArrayView2<'_, f64>) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Argument(format!(
            "{name} must be non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if let Some(((i, j), v)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Data(format!("{name}[{i}][{j}] = {v} is not finite")));
    }
    Ok(())
}

pub(crate) fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
