//! Real block-diagonalization of a square matrix into the invariant subspaces
//! of its "large" and "near-zero" eigenvalues.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, inverse, sort_by_real_desc, spectral_norm};

/// Condition number above which the block transformation is rejected.
pub const MAX_TRANSFORM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Split {
    /// Columns: real basis of the large-eigenvalue subspace, then of the small one.
    pub m: DMatrix<f64>,
    pub m_inv: DMatrix<f64>,
    pub r: usize,
    /// Diagonal blocks of `m_inv · X · m`.
    pub large: DMatrix<f64>,
    pub small: DMatrix<f64>,
    /// Largest off-diagonal block norm left after the transformation.
    pub coupling: f64,
    /// Eigenvalues in the large group, real part descending.
    pub large_eigenvalues: Vec<Complex64>,
}

/// Splits `x` by eigenvalue magnitude against `tol` (absolute).
///
/// Eigenvalues with `|θ| <= tol` form the small group. Any magnitude strictly
/// inside `(0.1·tol, 10·tol)` is ambiguous and rejected.
pub fn split_by_magnitude(x: &DMatrix<f64>, tol: f64) -> Result<Split> {
    let n = x.nrows();
    if n == 0 {
        return Ok(Split {
            m: DMatrix::zeros(0, 0),
            m_inv: DMatrix::zeros(0, 0),
            r: 0,
            large: DMatrix::zeros(0, 0),
            small: DMatrix::zeros(0, 0),
            coupling: 0.0,
            large_eigenvalues: Vec::new(),
        });
    }
    let xc = x.map(|v| Complex64::new(v, 0.0));
    let schur = Schur::try_new(xc, f64::EPSILON, 100_000).ok_or(Error::Singular("Schur iteration did not converge"))?;
    let (mut q, mut t) = schur.unpack();
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }

    for i in 0..n {
        let mag = t[(i, i)].norm();
        if mag > 0.1 * tol && mag < 10.0 * tol {
            return Err(Error::ClusterAmbiguity { magnitude: mag, tol });
        }
    }
    let is_large = |z: Complex64| z.norm() > tol;

    // bubble the large eigenvalues to the leading positions
    loop {
        let mut swapped = false;
        for k in 0..n - 1 {
            if !is_large(t[(k, k)]) && is_large(t[(k + 1, k + 1)]) {
                swap_adjacent(&mut t, &mut q, k);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    let r = (0..n).filter(|&i| is_large(t[(i, i)])).count();

    let mut large_eigenvalues: Vec<Complex64> = (0..r).map(|i| t[(i, i)]).collect();
    sort_by_real_desc(&mut large_eigenvalues);

    let m = if r == 0 || r == n {
        DMatrix::identity(n, n)
    } else {
        let y = solve_triangular_sylvester(&t, r)?;
        let q1 = q.columns(0, r).into_owned();
        let q2 = q.columns(r, n - r).into_owned();
        let v_small = &q1 * &y + q2;
        let b_large = realify(&q1, r);
        let b_small = realify(&v_small, n - r);
        let mut m = DMatrix::zeros(n, n);
        m.columns_mut(0, r).copy_from(&b_large);
        m.columns_mut(r, n - r).copy_from(&b_small);
        m
    };

    let cond = condition_number(&m);
    if !(cond <= MAX_TRANSFORM_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let m_inv = inverse(&m, "block transformation")?;
    let blocks = &m_inv * x * &m;
    let large = blocks.view((0, 0), (r, r)).into_owned();
    let small = blocks.view((r, r), (n - r, n - r)).into_owned();
    let upper = spectral_norm(&blocks.view((0, r), (r, n - r)).into_owned());
    let lower = spectral_norm(&blocks.view((r, 0), (n - r, r)).into_owned());

    Ok(Split { m, m_inv, r, large, small, coupling: upper.max(lower), large_eigenvalues })
}

/// Unitary similarity swapping the adjacent diagonal entries `k`, `k+1` of an
/// upper-triangular `t`, accumulated into `q`.
fn swap_adjacent(t: &mut DMatrix<Complex64>, q: &mut DMatrix<Complex64>, k: usize) {
    let n = t.nrows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let (cs, sn) = givens(t[(k, k + 1)], t22 - t11);
    for j in k + 2..n {
        let x = t[(k, j)];
        let y = t[(k + 1, j)];
        t[(k, j)] = x * cs + sn * y;
        t[(k + 1, j)] = y * cs - sn.conj() * x;
    }
    let snc = sn.conj();
    for i in 0..k {
        let x = t[(i, k)];
        let y = t[(i, k + 1)];
        t[(i, k)] = x * cs + snc * y;
        t[(i, k + 1)] = y * cs - snc.conj() * x;
    }
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    for i in 0..n {
        let x = q[(i, k)];
        let y = q[(i, k + 1)];
        q[(i, k)] = x * cs + snc * y;
        q[(i, k + 1)] = y * cs - snc.conj() * x;
    }
}

/// `(c, s)` with `[c s; -s̄ c]·[f; g] = [r; 0]`, `c` real.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    if g == zero {
        return (1.0, zero);
    }
    if f == zero {
        return (0.0, g.conj() / g.norm());
    }
    let fa = f.norm();
    let norm = fa.hypot(g.norm());
    (fa / norm, (f / fa) * g.conj() / norm)
}

/// `Y` with `T11·Y − Y·T22 = −T12` for the leading `r×r` / trailing blocks of
/// an upper-triangular `t`.
fn solve_triangular_sylvester(t: &DMatrix<Complex64>, r: usize) -> Result<DMatrix<Complex64>> {
    let n = t.nrows();
    let s = n - r;
    let mut y = DMatrix::<Complex64>::zeros(r, s);
    for k in 0..s {
        let mut rhs: Vec<Complex64> = (0..r).map(|i| -t[(i, r + k)]).collect();
        for (i, v) in rhs.iter_mut().enumerate() {
            for l in 0..k {
                *v += y[(i, l)] * t[(r + l, r + k)];
            }
        }
        let shift = t[(r + k, r + k)];
        // back substitution with (T11 − shift·I)
        for i in (0..r).rev() {
            let mut acc = rhs[i];
            for j in i + 1..r {
                acc -= t[(i, j)] * y[(j, k)];
            }
            let piv = t[(i, i)] - shift;
            if piv.norm() == 0.0 {
                return Err(Error::Singular("coupling equation"));
            }
            y[(i, k)] = acc / piv;
        }
    }
    Ok(y)
}

/// Orthonormal real basis (`k` columns) of a conjugation-invariant complex
/// column space.
fn realify(v: &DMatrix<Complex64>, k: usize) -> DMatrix<f64> {
    let n = v.nrows();
    let c = v.ncols();
    let mut b = DMatrix::zeros(n, 2 * c);
    for j in 0..c {
        for i in 0..n {
            b[(i, j)] = v[(i, j)].re;
            b[(i, c + j)] = v[(i, j)].im;
        }
    }
    // leading eigenvectors of B·Bᵀ; the left vectors from nalgebra's SVD can
    // miss the column space of rank-deficient inputs
    let eig = SymmetricEigen::new(&b * b.transpose());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut out = DMatrix::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        out.set_column(col, &eig.eigenvectors.column(idx));
    }
    out
}
