//! Stability instruments: the spectrum of the modal operators, scalar-pencil
//! sign relations, LMI admissibility certificates and the energy decay rate.

pub mod energy;
pub mod lmi;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

pub use energy::{
    deviation_from_average, energy_integral, energy_series, fit_log_rate, poincare_check, poincare_check_spectral,
    EnergySeries, PoincareResiduals,
};
pub use lmi::{lmi_certificate, lmi_literal_lambda1, lyapunov_solve, verify_lmi, LmiCertificate};

use crate::eigenbasis::Basis;
use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues, is_scalar_multiple_of_identity, min_symmetric_eigenvalue, spectral_norm, symmetric_eigenvalues,
};
use crate::pencil::{weierstrass_scalar, MatrixPencil};

/// Imaginary parts below this (relative) count as real.
const REAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEigenvalue {
    /// 1-based mode number.
    pub j: usize,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Eigenvalues of `A − μ_j D` over the retained modes, real part descending.
    pub lambdas: Vec<ModeEigenvalue>,
    /// Number of eigenvalues with nonnegative real part.
    pub g: usize,
    /// `|λ_1| / |λ_{g+1}|` when `λ_{g+1}` exists.
    pub epsilon: Option<f64>,
    pub all_real: bool,
    /// Smallest mode from which every retained mode is strictly stable.
    pub tail_negative_from: Option<usize>,
}

impl SpectrumReport {
    pub fn epsilon_below_one(&self) -> Option<bool> {
        self.epsilon.map(|e| e < 1.0)
    }

    pub fn max_real(&self) -> Option<f64> {
        self.lambdas.first().map(|l| l.value.re)
    }
}

pub fn spectrum_report(d: &DMatrix<f64>, a: &DMatrix<f64>, basis: &Basis, count: usize) -> Result<SpectrumReport> {
    if count > basis.len() {
        return Err(Error::InvalidInput(format!("mode count {count} exceeds the basis size {}", basis.len())));
    }
    let per_mode: Vec<Vec<Complex64>> = basis.modes[..count].par_iter().map(|m| eigenvalues(&(a - d * m.mu))).collect();
    let mut lambdas: Vec<ModeEigenvalue> = per_mode
        .iter()
        .enumerate()
        .flat_map(|(i, ev)| ev.iter().map(move |&value| ModeEigenvalue { j: i + 1, value }))
        .collect();
    lambdas
        .sort_by(|x, y| y.value.re.total_cmp(&x.value.re).then(y.value.im.total_cmp(&x.value.im)).then(x.j.cmp(&y.j)));
    let g = lambdas.iter().filter(|l| l.value.re >= 0.0).count();
    let epsilon = match (lambdas.first(), lambdas.get(g)) {
        (Some(first), Some(next)) if next.value.re < 0.0 => Some(first.value.norm() / next.value.norm()),
        _ => None,
    };
    let all_real = lambdas.iter().all(|l| l.value.im.abs() <= REAL_TOL * l.value.norm().max(1.0));
    let mut tail_negative_from = None;
    for (i, ev) in per_mode.iter().enumerate().rev() {
        if ev.iter().all(|v| v.re < 0.0) {
            tail_negative_from = Some(i + 1);
        } else {
            break;
        }
    }
    Ok(SpectrumReport { lambdas, g, epsilon, all_real, tail_negative_from })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignReversalEntry {
    pub lambda: f64,
    /// Eigenvalue of `E`.
    pub e: Complex64,
    /// Generalized eigenvalue of `(E, λI)` matched to `λ/e`.
    pub s: Complex64,
    /// `sign(Re s) = sign(λ)·sign(Re e)`.
    pub consistent: bool,
    /// `Re s` and `λ` have opposite signs.
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignReversalReport {
    pub entries: Vec<SignReversalEntry>,
    pub all_consistent: bool,
    /// `σ(E) ⊂ [0, ∞)`, necessary for the scalar family to be admissible.
    pub e_nonnegative: bool,
    /// Largest `|s − λ/e|` over the matched pairs.
    pub max_relation_error: f64,
}

/// Checks `s = λ/e` for the pencils `(E, λ_j I)`, computing `s` from the
/// pencil and `e` from `E` separately.
pub fn sign_reversal_check(e: &DMatrix<f64>, lambdas: &[f64]) -> Result<SignReversalReport> {
    let ev = eigenvalues(e);
    let scale = spectral_norm(e).max(1.0);
    let tol = 1e-8 * scale;
    let nonzero: Vec<Complex64> = ev.iter().copied().filter(|v| v.norm() > tol).collect();
    let e_nonnegative = ev.iter().all(|v| v.re >= -tol && v.im.abs() <= tol);
    let mut entries = Vec::new();
    let mut max_relation_error = 0.0_f64;
    for &lambda in lambdas {
        if lambda == 0.0 {
            continue;
        }
        let sw = weierstrass_scalar(e, lambda)?;
        let mut pool = sw.finite_spectrum.clone();
        for &eig in &nonzero {
            let predicted = Complex64::new(lambda, 0.0) / eig;
            let (idx, _) = pool
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - predicted).norm().total_cmp(&(b.1 - predicted).norm()))
                .ok_or(Error::IrregularPencil)?;
            let s = pool.swap_remove(idx);
            max_relation_error = max_relation_error.max((s - predicted).norm() / predicted.norm().max(1.0));
            let consistent = s.re.signum() == lambda.signum() * eig.re.signum();
            entries.push(SignReversalEntry {
                lambda,
                e: eig,
                s,
                consistent,
                reversed: s.re.signum() != lambda.signum(),
            });
        }
    }
    let all_consistent = entries.iter().all(|e| e.consistent);
    Ok(SignReversalReport { entries, all_consistent, e_nonnegative, max_relation_error })
}

/// Same check driven by explicit pencils; every `A` must be `λ_j I` and all
/// pencils must share `E`.
pub fn sign_reversal_from_pencils(pencils: &[MatrixPencil]) -> Result<SignReversalReport> {
    let Some(first) = pencils.first() else {
        return sign_reversal_check(&DMatrix::zeros(0, 0), &[]);
    };
    let mut lambdas = Vec::with_capacity(pencils.len());
    for p in pencils {
        if p.e != first.e {
            return Err(Error::NonScalarPencil);
        }
        lambdas.push(is_scalar_multiple_of_identity(&p.a, 1e-12).ok_or(Error::NonScalarPencil)?);
    }
    sign_reversal_check(&first.e, &lambdas)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayCertificate {
    /// Smallest positive eigenvalue of the symmetric part of `D`.
    pub d1: f64,
    pub mu1: f64,
    pub norm_a: f64,
    pub norm_e: f64,
    pub n: usize,
    /// `2(d1·μ1 − ‖A‖)/‖E‖`.
    pub delta: f64,
    pub e_psd: bool,
    pub d_pd: bool,
    pub applicable: bool,
}

impl DecayCertificate {
    /// `d1·μ1 − ‖A‖`.
    pub fn margin(&self) -> f64 {
        self.d1 * self.mu1 - self.norm_a
    }

    /// `n·d1·μ1 − ‖A‖`, the dimension-weighted variant of the margin.
    pub fn dimension_weighted_margin(&self) -> f64 {
        self.n as f64 * self.d1 * self.mu1 - self.norm_a
    }
}

pub fn delta_criterion(e: &DMatrix<f64>, d: &DMatrix<f64>, a: &DMatrix<f64>, mu1: f64) -> DecayCertificate {
    let d_eigs = symmetric_eigenvalues(d);
    let d_scale = d_eigs.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let d1 = d_eigs.iter().copied().find(|&v| v > 1e-12 * d_scale).unwrap_or(0.0);
    let d_pd = d_eigs.first().is_some_and(|&v| v > 1e-12 * d_scale);
    let e_sym_ok = (e - e.transpose()).norm() <= 1e-12 * e.norm().max(1.0);
    let e_psd = e_sym_ok && min_symmetric_eigenvalue(e) >= -1e-12 * spectral_norm(e).max(1.0);
    let norm_a = spectral_norm(a);
    let norm_e = spectral_norm(e);
    let delta = if norm_e > 0.0 { 2.0 * (d1 * mu1 - norm_a) / norm_e } else { f64::NAN };
    DecayCertificate {
        d1,
        mu1,
        norm_a,
        norm_e,
        n: e.nrows(),
        delta,
        e_psd,
        d_pd,
        applicable: e_psd && d_pd && delta > 0.0,
    }
}
