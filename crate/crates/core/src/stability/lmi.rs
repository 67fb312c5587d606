//! Constructive certificates for `EᵀP = PᵀE ⪰ 0`, `λ₁(Pᵀ + P) + PᵀA + AᵀP ≺ 0`.

use nalgebra::{DMatrix, DVector};

use crate::eigenbasis::Basis;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, max_symmetric_eigenvalue, min_symmetric_eigenvalue, solve, spectral_norm};
use crate::pencil::{is_regular, weierstrass, MatrixPencil};

/// Feasibility tolerance for the equality and semidefinite conditions,
/// relative to `max(1, ‖E‖·‖P‖)`.
pub const LMI_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LmiCertificate {
    pub p: DMatrix<f64>,
    /// `‖EᵀP − PᵀE‖₂`.
    pub sym_residual: f64,
    /// Smallest eigenvalue of the symmetric part of `EᵀP`.
    pub semidef_margin: f64,
    /// Largest eigenvalue of `λ₁(Pᵀ + P) + PᵀA + AᵀP`.
    pub neg_margin: f64,
    pub feasible: bool,
    pub diagnostics: Vec<String>,
}

/// Solves `AᵀX + XA = −Q` through its Kronecker form.
pub fn lyapunov_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = a.nrows();
    if r == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    // λ_i + λ_k ≈ 0 makes the operator singular
    let ev = eigenvalues(a);
    let scale = spectral_norm(a).max(1.0);
    let closest = ev.iter().flat_map(|x| ev.iter().map(move |y| (x + y).norm())).fold(f64::INFINITY, f64::min);
    if closest <= 1e-12 * scale {
        return Err(Error::SingularLyapunov(closest));
    }
    let at = a.transpose();
    let id = DMatrix::<f64>::identity(r, r);
    // vec(AᵀX) = (I ⊗ Aᵀ) vec X and vec(XA) = (Aᵀ ⊗ I) vec X (column-major vec)
    let op = id.kronecker(&at) + at.kronecker(&id);
    let rhs = DVector::from_iterator(r * r, q.iter().map(|v| -v));
    let x = op.lu().solve(&rhs).ok_or(Error::SingularLyapunov(closest))?;
    let x = DMatrix::from_column_slice(r, r, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Evaluates both matrix inequalities for a given `P` and `Ã = λ₁I + A_eff`.
pub fn verify_lmi(e: &DMatrix<f64>, a_tilde: &DMatrix<f64>, p: &DMatrix<f64>) -> LmiCertificate {
    let etp = e.transpose() * p;
    let sym_residual = spectral_norm(&(&etp - p.transpose() * e));
    let semidef_margin = min_symmetric_eigenvalue(&etp);
    let lyap = p.transpose() * a_tilde + a_tilde.transpose() * p;
    let neg_margin = max_symmetric_eigenvalue(&lyap);
    let tol = LMI_TOL * (spectral_norm(e) * spectral_norm(p)).max(1.0);
    let mut diagnostics = Vec::new();
    if sym_residual > tol {
        diagnostics.push(format!("EᵀP is not symmetric (residual {sym_residual:e})"));
    }
    if semidef_margin < -tol {
        diagnostics.push(format!("EᵀP is indefinite (min eigenvalue {semidef_margin:e})"));
    }
    if !(neg_margin < 0.0) {
        diagnostics.push(format!("second inequality fails (max eigenvalue {neg_margin:e})"));
    }
    LmiCertificate {
        p: p.clone(),
        sym_residual,
        semidef_margin,
        neg_margin,
        feasible: diagnostics.is_empty(),
        diagnostics,
    }
}

/// Builds `P` from the canonical form of `(E, λ₁I + A_eff)` and verifies it
/// in the original coordinates.
///
/// In coordinates where `L E R = diag(I, J)` and `L Ã R = diag(A_s, I)`, the
/// candidate is `P = Lᵀ diag(P₁, −I) R⁻¹` with `A_sᵀP₁ + P₁A_s = −I`.
pub fn lmi_certificate(e: &DMatrix<f64>, a_eff: &DMatrix<f64>, lambda1: f64) -> Result<LmiCertificate> {
    let n = e.nrows();
    let a_tilde = a_eff + DMatrix::<f64>::identity(n, n) * lambda1;
    let pencil = MatrixPencil::new(e.clone(), a_tilde.clone())?;
    let (regular, c) = is_regular(&pencil);
    if !regular {
        return Err(Error::IrregularPencil);
    }
    let w = weierstrass(&pencil, c)?;
    let r = w.r;
    let a_s = solve(&w.e1, &w.a1, "E1")?;
    let p1 = lyapunov_solve(&a_s, &DMatrix::identity(r, r))?;
    let mut core = -DMatrix::<f64>::identity(n, n);
    core.view_mut((0, 0), (r, r)).copy_from(&p1);
    let e1_inv = crate::linalg::inverse(&w.e1, "E1")?;
    let mut slow_scale = DMatrix::<f64>::identity(n, n);
    slow_scale.view_mut((0, 0), (r, r)).copy_from(&e1_inv);
    let l = slow_scale * &w.left;
    let p = l.transpose() * core * &w.m_inv;
    let mut cert = verify_lmi(e, &a_tilde, &p);
    if w.nu > 1 {
        cert.diagnostics.push(format!("pencil has index {} (impulsive)", w.nu));
    }
    Ok(cert)
}

/// `max_j max σ(−μ_j D)` over the retained modes, the literal reading of the
/// largest spatial-operator eigenvalue.
pub fn lmi_literal_lambda1(d: &DMatrix<f64>, basis: &Basis, count: usize) -> f64 {
    basis.modes[..count.min(basis.len())]
        .iter()
        .flat_map(|m| eigenvalues(&(d * -m.mu)))
        .map(|v| v.re)
        .fold(f64::NEG_INFINITY, f64::max)
}
