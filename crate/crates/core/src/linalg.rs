//! Small dense helpers shared by the pencil, stability and modal code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Builds a matrix from row vectors, checking that every row has the same length.
pub fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::Dimension {
                name: format!("{name} row {}", i + 1),
                expected: format!("{ncols} columns"),
                actual: format!("{} columns", row.len()),
            });
        }
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn require_square(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension {
            name: name.to_string(),
            expected: format!("{n}x{n}"),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// Largest singular value; zero for empty matrices.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().fold(0.0_f64, |acc, &s| acc.max(s))
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// 2-norm condition number; infinite when the matrix is numerically singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Number of singular values above `tol`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > tol).count()
}

pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Ascending eigenvalues of the symmetric part of `m`.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = symmetric_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Eigenvalues of a real matrix, sorted by real part descending then imaginary part descending.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    sort_by_real_desc(&mut ev);
    ev
}

pub fn sort_by_real_desc(v: &mut [Complex64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

pub fn inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if m.is_empty() {
        return Ok(m.clone());
    }
    m.clone().try_inverse().ok_or(Error::Singular(what))
}

pub fn solve(m: &DMatrix<f64>, rhs: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if m.is_empty() {
        return Ok(rhs.clone());
    }
    m.clone().lu().solve(rhs).ok_or(Error::Singular(what))
}

pub fn solve_vec(m: &DMatrix<f64>, rhs: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    if m.is_empty() {
        return Ok(rhs.clone());
    }
    m.clone().lu().solve(rhs).ok_or(Error::Singular(what))
}

pub fn is_scalar_multiple_of_identity(m: &DMatrix<f64>, tol: f64) -> Option<f64> {
    if !m.is_square() || m.is_empty() {
        return None;
    }
    let lambda = m[(0, 0)];
    let scale = tol * (1.0 + lambda.abs());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let expect = if i == j { lambda } else { 0.0 };
            if (m[(i, j)] - expect).abs() > scale {
                return None;
            }
        }
    }
    Some(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_are_rejected() {
        let err = matrix_from_rows("E", &[vec![1.0, 0.0], vec![1.0]]).unwrap_err();
        assert!(err.to_string().contains('E'));
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-3.0, 2.0]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&DMatrix::zeros(0, 0)), 0.0);
    }

    #[test]
    fn eigenvalue_ordering() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let ev = eigenvalues(&m);
        assert!((ev[0].im - 1.0).abs() < 1e-12);
        assert!((ev[1].im + 1.0).abs() < 1e-12);
    }
}
