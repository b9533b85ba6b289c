//! Dense decompositions with exact shortcuts for diagonal and triangular
//! inputs.

use nalgebra::{DMatrix, Schur, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;

pub(crate) fn is_diagonal(a: &DMatrix<Complex64>) -> bool {
    let zero = Complex64::new(0.0, 0.0);
    a.column_iter()
        .enumerate()
        .all(|(j, col)| col.iter().enumerate().all(|(i, v)| i == j || *v == zero))
}

fn is_triangular(a: &DMatrix<Complex64>) -> bool {
    let zero = Complex64::new(0.0, 0.0);
    let upper = a
        .column_iter()
        .enumerate()
        .all(|(j, col)| col.iter().skip(j + 1).all(|v| *v == zero));
    upper
        || a.column_iter()
            .enumerate()
            .all(|(j, col)| col.iter().take(j).all(|v| *v == zero))
}

fn sort_desc(v: &mut [f64]) {
    v.sort_by(|a, b| b.total_cmp(a));
}

/// Singular values, non-increasing.
pub(crate) fn singular_values(a: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let mut s: Vec<f64> = if is_diagonal(a) {
        a.diagonal().iter().map(|v| v.norm()).collect()
    } else {
        let svd = SVD::try_new(a.clone(), false, false, f64::EPSILON, MAX_ITER)
            .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
        svd.singular_values.iter().copied().collect()
    };
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite singular value".into()));
    }
    sort_desc(&mut s);
    Ok(s)
}

/// Largest singular value.
pub(crate) fn spectral_norm(a: &DMatrix<Complex64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(singular_values(a)?[0])
}

/// Eigenvalues sorted by modulus, largest first (stable for ties).
pub(crate) fn eigenvalues(a: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let mut lambda: Vec<Complex64> = if is_triangular(a) {
        a.diagonal().iter().copied().collect()
    } else {
        schur_eigenvalues(a)?
    };
    if lambda.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    lambda.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    Ok(lambda)
}

/// Complex shifts tried when the plain iteration stalls; `A + cI` breaks
/// the modulus ties that defeat the built-in shift strategy.
const RETRY_SHIFTS: [(f64, f64); 3] = [(0.3737, 0.6121), (-0.5813, 0.2269), (0.1571, -0.8912)];

fn schur_eigenvalues(a: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if let Some(s) = Schur::try_new(a.clone(), f64::EPSILON, MAX_ITER) {
        return Ok(quasi_triangular_eigenvalues(&s.unpack().1));
    }
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    for (re, im) in RETRY_SHIFTS {
        let c = Complex64::new(re, im) * scale;
        let shifted = a + DMatrix::from_diagonal_element(a.nrows(), a.ncols(), c);
        if let Some(s) = Schur::try_new(shifted, f64::EPSILON, MAX_ITER) {
            return Ok(quasi_triangular_eigenvalues(&s.unpack().1).into_iter().map(|v| v - c).collect());
        }
    }
    Err(Error::NumericalFailure("Schur iteration did not converge".into()))
}

fn quasi_triangular_eigenvalues(t: &DMatrix<Complex64>) -> Vec<Complex64> {
    let n = t.nrows();
    let mut out = Vec::with_capacity(n);
    let mut m = 0;
    while m < n {
        if m + 1 < n && t[(m + 1, m)] != Complex64::new(0.0, 0.0) {
            let (a, b, c, d) = (t[(m, m)], t[(m, m + 1)], t[(m + 1, m)], t[(m + 1, m + 1)]);
            let half_tr = (a + d) * 0.5;
            let disc = ((a - d) * 0.5).powi(2) + b * c;
            let root = disc.sqrt();
            out.push(half_tr + root);
            out.push(half_tr - root);
            m += 2;
        } else {
            out.push(t[(m, m)]);
            m += 1;
        }
    }
    out
}

/// Inverse through LU; singular or ill-conditioned input is an error.
pub(crate) fn inverse(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if is_diagonal(a) {
        let mut inv = DMatrix::from_element(a.nrows(), a.ncols(), Complex64::new(0.0, 0.0));
        for i in 0..a.nrows() {
            let v = a[(i, i)];
            if v == Complex64::new(0.0, 0.0) {
                return Err(Error::SingularMatrix(format!("zero diagonal entry at {i}")));
            }
            inv[(i, i)] = Complex64::new(1.0, 0.0) / v;
        }
        return Ok(inv);
    }
    let s = singular_values(a)?;
    let (top, bottom) = (s[0], *s.last().unwrap());
    if !(bottom > top * 1e-13) {
        return Err(Error::SingularMatrix(format!(
            "smallest singular value {bottom:e} against largest {top:e}"
        )));
    }
    a.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("LU pivot vanished".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rotation_has_conjugate_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let mut l = eigenvalues(&a).unwrap();
        l.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((l[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((l[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn dense_eigenvalues_match_trace_and_det() {
        let a = DMatrix::from_fn(5, 5, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, (i as f64 - j as f64) * 0.3));
        let l = eigenvalues(&a).unwrap();
        let tr: Complex64 = l.iter().sum();
        assert!((tr - a.trace()).norm() < 1e-10);
        let det: Complex64 = l.iter().product();
        assert!((det - a.clone().determinant()).norm() < 1e-8 * det.norm().max(1.0));
    }

    #[test]
    fn cyclic_permutation_gives_roots_of_unity() {
        for n in [4usize, 8, 16] {
            let a = DMatrix::from_fn(n, n, |i, j| if i == (j + 1) % n { c(1.0, 0.0) } else { c(0.0, 0.0) });
            let l = eigenvalues(&a).unwrap();
            for k in 0..n {
                let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
                let d = l.iter().map(|v| (v - w).norm()).fold(f64::INFINITY, f64::min);
                assert!(d < 1e-12, "n={n} k={k} d={d}");
            }
        }
    }

    #[test]
    fn singular_and_inverse() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let s = singular_values(&a).unwrap();
        assert!((s[0] - 2f64.sqrt()).abs() < 1e-14 && s[1].abs() < 1e-14);
        assert!(matches!(inverse(&a), Err(Error::SingularMatrix(_))));
        let b = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 1.0)]);
        let inv = inverse(&b).unwrap();
        let id = &b * &inv;
        assert!((id - DMatrix::identity(2, 2)).norm() < 1e-14);
    }
}
