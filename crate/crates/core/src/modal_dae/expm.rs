//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest `‖M t‖₁` accepted before asking the caller to rescale.
pub const MAX_EXPONENT_NORM: f64 = 1e4;

const THETA_13: f64 = 5.371920351148152;

const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `e^{M t}`.
pub fn matrix_exponential(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension {
            name: "exponential argument".into(),
            expected: "square".into(),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    if m.iter().any(|v| !v.is_finite()) || !t.is_finite() {
        return Err(Error::InvalidInput("matrix exponential of non-finite data".into()));
    }
    let a = m * t;
    let norm = one_norm(&a);
    if norm > MAX_EXPONENT_NORM {
        return Err(Error::ExpmOverflow(norm));
    }
    if n == 0 {
        return Ok(a);
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = a * 2f64.powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE_13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(Error::Singular("Pade denominator"))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn zero_and_diagonal() {
        let z = matrix_exponential(&DMatrix::zeros(3, 3), 1.0).unwrap();
        assert_eq!(z, DMatrix::identity(3, 3));
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, 0.5]));
        let e = matrix_exponential(&d, 1.5).unwrap();
        assert!((e[(0, 0)] - (-3.0f64).exp()).abs() < 1e-15);
        assert!((e[(1, 1)] - 0.75f64.exp()).abs() < 1e-14);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn rotation_generator() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = matrix_exponential(&m, 10.0).unwrap();
        assert!((e[(0, 0)] - 10f64.cos()).abs() < 1e-12);
        assert!((e[(0, 1)] - 10f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn overflow_is_reported() {
        let m = DMatrix::from_element(2, 2, 1.0);
        assert!(matches!(matrix_exponential(&m, 1e5), Err(Error::ExpmOverflow(_))));
    }
}
