use ndarray::{Array1, Array2};

/// Least-squares solution of `a x ≈ b` by Householder QR.
///
/// Returns `None` when `a` has fewer rows than columns or is numerically
/// rank deficient.
pub fn lstsq(a: Array2<f64>, b: &[f64]) -> Option<Array1<f64>> {
    let scale = a.columns().into_iter().map(|c| c.dot(&c).sqrt()).fold(0.0, f64::max);
    lstsq_with_tol(a, b, 1e-12 * scale.max(f64::MIN_POSITIVE))
}

pub(crate) fn lstsq_with_tol(mut a: Array2<f64>, b: &[f64], rank_tol: f64) -> Option<Array1<f64>> {
    let (m, n) = a.dim();
    if m < n || b.len() != m {
        return None;
    }
    let mut rhs = b.to_vec();
    let mut v = vec![0.0; m];
    for k in 0..n {
        let norm = (k..m).map(|i| a[[i, k]] * a[[i, k]]).sum::<f64>().sqrt();
        if norm <= rank_tol {
            return None;
        }
        let alpha = if a[[k, k]] > 0.0 { -norm } else { norm };
        for i in k..m {
            v[i] = a[[i, k]];
        }
        v[k] -= alpha;
        let vnorm2: f64 = (k..m).map(|i| v[i] * v[i]).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let s: f64 = (k..m).map(|i| v[i] * a[[i, j]]).sum::<f64>() * 2.0 / vnorm2;
                for i in k..m {
                    a[[i, j]] -= s * v[i];
                }
            }
            let s: f64 = (k..m).map(|i| v[i] * rhs[i]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                rhs[i] -= s * v[i];
            }
        }
        if a[[k, k]].abs() <= rank_tol {
            return None;
        }
    }
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= a[[i, j]] * x[j];
        }
        x[i] = s / a[[i, i]];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_overdetermined_line_fit() {
        // y = 1 + 2t sampled exactly
        let a = array![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]];
        let x = lstsq(a, &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_is_none() {
        let a = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        assert!(lstsq(a, &[1.0, 2.0, 3.0]).is_none());
        assert!(lstsq(array![[1.0, 1.0]], &[1.0]).is_none());
    }
}
