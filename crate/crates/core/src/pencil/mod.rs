//! Regular matrix pencils `(E, A)`: regularity, finite spectra, the
//! Weierstrass canonical form and admissibility.

mod split;

pub use split::{split_by_magnitude, Split, MAX_TRANSFORM_CONDITION};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{inverse, numerical_rank, require_square, solve, spectral_norm};

/// Relative eigenvalue magnitude below which `(cE − A)⁻¹E` is treated as nilpotent.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Normalized determinant level separating regular from singular pencils.
pub const REGULARITY_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPencil {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

impl MatrixPencil {
    pub fn new(e: DMatrix<f64>, a: DMatrix<f64>) -> Result<Self> {
        let n = e.nrows();
        require_square("E", &e, n)?;
        require_square("A", &a, n)?;
        Ok(Self { e, a })
    }

    pub fn dim(&self) -> usize {
        self.e.nrows()
    }

    /// `cE − A`.
    pub fn shifted(&self, c: f64) -> DMatrix<f64> {
        &self.e * c - &self.a
    }
}

/// Sample points `s_k = k + 1/2`, `k = 0..=n`.
fn sample_points(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(|k| k as f64 + 0.5)
}

/// Regularity test by sampling `det(sE − A)`; returns the sample with the
/// largest determinant magnitude as a shift witness.
pub fn is_regular(p: &MatrixPencil) -> (bool, f64) {
    let n = p.dim();
    if n == 0 {
        return (true, 0.5);
    }
    let ne = spectral_norm(&p.e);
    let na = spectral_norm(&p.a);
    let mut best = (0.0_f64, 0.5);
    let mut regular = false;
    for s in sample_points(n) {
        let det = p.shifted(s).determinant().abs();
        let scale = (s.abs() * ne + na).powi(n as i32);
        if scale > 0.0 && det > REGULARITY_TOL * scale {
            regular = true;
        }
        if det > best.0 {
            best = (det, s);
        }
    }
    (regular, best.1)
}

/// Two-sided canonical form of a regular pencil.
///
/// With `x = M ξ`, `left·E·M = diag(E1, J)` and `left·A·M = diag(A1, I)`, so the
/// slow part obeys `E1 ξ̇₁ = A1 ξ₁ + B1 u` and the fast part `J ξ̇₂ = ξ₂ + B2 u`.
#[derive(Debug, Clone)]
pub struct WeierstrassForm {
    pub m: DMatrix<f64>,
    pub m_inv: DMatrix<f64>,
    pub left: DMatrix<f64>,
    pub r: usize,
    pub e1: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub nu: usize,
    pub shift: f64,
    /// `M⁻¹(cE−A)⁻¹E M` minus its block diagonal, spectral norm.
    pub coupling_residual: f64,
    /// Finite generalized eigenvalues, real part descending.
    pub finite_spectrum: Vec<Complex64>,
}

impl WeierstrassForm {
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    /// `E1⁻¹A1`, the slow-subsystem generator.
    pub fn slow_generator(&self) -> Result<DMatrix<f64>> {
        solve(&self.e1, &self.a1, "E1")
    }

    /// `(B1, B2)` = rows of `left·B` split at `r`.
    pub fn input_blocks(&self, b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let lb = &self.left * b;
        let n = self.n();
        (lb.rows(0, self.r).into_owned(), lb.rows(self.r, n - self.r).into_owned())
    }
}

fn shifted_inverse_product(p: &MatrixPencil, c: f64) -> Result<DMatrix<f64>> {
    solve(&p.shifted(c), &p.e, "cE - A")
}

pub fn weierstrass(p: &MatrixPencil, c: f64) -> Result<WeierstrassForm> {
    weierstrass_with_tol(p, c, DEFAULT_CLUSTER_TOL)
}

pub fn weierstrass_with_tol(p: &MatrixPencil, c: f64, cluster_tol: f64) -> Result<WeierstrassForm> {
    let n = p.dim();
    let k = p.shifted(c);
    let k_inv = inverse(&k, "cE - A")?;
    let e_hat = &k_inv * &p.e;
    let tol = cluster_tol * spectral_norm(&e_hat);
    let sp = split_by_magnitude(&e_hat, tol)?;
    let r = sp.r;

    let fast_a = &sp.small * c - DMatrix::identity(n - r, n - r);
    let fast_a_inv = inverse(&fast_a, "fast shift block")?;
    let j = &fast_a_inv * &sp.small;
    let nu = nilpotency_index(&j)?;

    let mut normalize = DMatrix::identity(n, n);
    normalize.view_mut((r, r), (n - r, n - r)).copy_from(&fast_a_inv);
    let left = normalize * &sp.m_inv * k_inv;

    let e1 = sp.large.clone();
    let a1 = &e1 * c - DMatrix::identity(r, r);
    let finite_spectrum =
        sp.large_eigenvalues.iter().map(|&theta| Complex64::new(c, 0.0) - theta.inv()).collect::<Vec<_>>();
    let mut finite_spectrum = finite_spectrum;
    crate::linalg::sort_by_real_desc(&mut finite_spectrum);

    Ok(WeierstrassForm {
        m: sp.m,
        m_inv: sp.m_inv,
        left,
        r,
        e1,
        a1,
        j,
        a2: DMatrix::identity(n - r, n - r),
        nu,
        shift: c,
        coupling_residual: sp.coupling,
        finite_spectrum,
    })
}

/// Finite eigenvalues `s = c − 1/θ` for the non-negligible eigenvalues `θ` of
/// `(cE − A)⁻¹E`, real part descending.
pub fn generalized_eigenvalues(p: &MatrixPencil, c: f64) -> Result<Vec<Complex64>> {
    let e_hat = shifted_inverse_product(p, c)?;
    let tol = DEFAULT_CLUSTER_TOL * spectral_norm(&e_hat);
    let sp = split_by_magnitude(&e_hat, tol)?;
    let mut s: Vec<Complex64> =
        sp.large_eigenvalues.iter().map(|&theta| Complex64::new(c, 0.0) - theta.inv()).collect();
    crate::linalg::sort_by_real_desc(&mut s);
    Ok(s)
}

/// Smallest `k` with `J^k` numerically zero; 0 for an empty block.
pub fn nilpotency_index(j: &DMatrix<f64>) -> Result<usize> {
    let n = j.nrows();
    if n == 0 {
        return Ok(0);
    }
    let scale = spectral_norm(j).max(1.0);
    let mut power = j.clone();
    for k in 1..=n {
        let tol = 1e-9 * scale.powi(k as i32) * n as f64;
        if numerical_rank(&power, tol) == 0 {
            return Ok(k);
        }
        power = &power * j;
    }
    Err(Error::NotNilpotent(n))
}

/// One-sided form for scalar pencils `(E, λI)`: `M⁻¹EM = diag(E1, J)`, and
/// `λI` is untouched by the similarity.
#[derive(Debug, Clone)]
pub struct ScalarWeierstrass {
    pub m: DMatrix<f64>,
    pub m_inv: DMatrix<f64>,
    pub r: usize,
    pub e1: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub nu: usize,
    pub lambda: f64,
    /// `λ / e` over the nonzero eigenvalues `e` of `E`, real part descending.
    pub finite_spectrum: Vec<Complex64>,
}

pub fn weierstrass_scalar(e: &DMatrix<f64>, lambda: f64) -> Result<ScalarWeierstrass> {
    let n = e.nrows();
    require_square("E", e, n)?;
    if lambda == 0.0 && n > 0 {
        return Err(Error::IrregularPencil);
    }
    let tol = DEFAULT_CLUSTER_TOL * spectral_norm(e);
    let sp = split_by_magnitude(e, tol)?;
    let nu = nilpotency_index(&sp.small)?;
    let mut finite_spectrum: Vec<Complex64> =
        sp.large_eigenvalues.iter().map(|&ev| Complex64::new(lambda, 0.0) / ev).collect();
    crate::linalg::sort_by_real_desc(&mut finite_spectrum);
    Ok(ScalarWeierstrass { m: sp.m, m_inv: sp.m_inv, r: sp.r, e1: sp.large, j: sp.small, nu, lambda, finite_spectrum })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PencilVerdict {
    pub regular: bool,
    pub witness: f64,
    pub r: usize,
    pub nu: usize,
    pub impulse_free: bool,
    pub finite_spectrum: Vec<Complex64>,
    pub admissible: bool,
}

pub fn verdict(p: &MatrixPencil) -> Result<PencilVerdict> {
    let (regular, witness) = is_regular(p);
    if !regular {
        return Ok(PencilVerdict {
            regular,
            witness,
            r: 0,
            nu: 0,
            impulse_free: false,
            finite_spectrum: Vec::new(),
            admissible: false,
        });
    }
    let w = weierstrass(p, witness)?;
    let impulse_free = w.nu <= 1;
    let stable = w.finite_spectrum.iter().all(|s| s.re < 0.0);
    Ok(PencilVerdict {
        regular,
        witness,
        r: w.r,
        nu: w.nu,
        impulse_free,
        admissible: impulse_free && stable,
        finite_spectrum: w.finite_spectrum,
    })
}
