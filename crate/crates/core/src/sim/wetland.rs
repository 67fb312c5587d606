//! Vegetation–herbivore model with an algebraic toxin component:
//!
//! ```text
//! x1_t = d1 Δx1 + r1 x1 (1 − x1/N1 − k1 x2/N2 − h1 x3)
//! x2_t = d2 Δx2 + r2 x2 (−1 + k2 x1/N1 − x2/N2 − h2 x3)
//!    0 =    Δx3 + x3
//! ```
//!
//! The algebraic row only admits nonzero `x3` on the `μ = 1` eigenspace of
//! `−Δ`, so `x3` is prescribed as a multiple of a unit-peak kernel field.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{AlgebraicHandling, SemilinearModel, SimSetup};
use crate::eigenbasis::{Basis, BoundarySpec, BoxDomain, FieldFn, Mode};
use crate::error::{Error, Result};
use crate::stability::{delta_criterion, spectrum_report, DecayCertificate, SpectrumReport};

/// Modes with `|μ − 1|` below this span the algebraic kernel.
pub const KERNEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WetlandParams {
    pub r1: f64,
    pub r2: f64,
    pub n1: f64,
    pub n2: f64,
    pub k1: f64,
    pub k2: f64,
    pub h1: f64,
    pub h2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl WetlandParams {
    /// Reference parameters with the given toxin sensitivities.
    pub fn reference(h1: f64, h2: f64) -> Self {
        Self { r1: 2.0, r2: 0.2, n1: 1.0, n2: 1.0, k1: 8.0, k2: 18.0, h1, h2, d1: 2.0, d2: 3.0 }
    }

    pub fn stable_case() -> Self {
        Self::reference(0.1, 0.1)
    }

    pub fn unstable_case() -> Self {
        Self::reference(24.0, 0.1)
    }

    pub fn e(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]))
    }

    pub fn d(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![self.d1, self.d2, 1.0]))
    }

    pub fn reaction(&self, x: &[f64], out: &mut [f64]) {
        let p = self;
        out[0] = p.r1 * x[0] * (1.0 - x[0] / p.n1 - p.k1 * x[1] / p.n2 - p.h1 * x[2]);
        out[1] = p.r2 * x[1] * (-1.0 + p.k2 * x[0] / p.n1 - x[1] / p.n2 - p.h2 * x[2]);
        out[2] = x[2];
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let p = self;
        DMatrix::from_row_slice(
            3,
            3,
            &[
                p.r1 * (1.0 - 2.0 * x[0] / p.n1 - p.k1 * x[1] / p.n2 - p.h1 * x[2]),
                -p.r1 * p.k1 * x[0] / p.n2,
                -p.r1 * p.h1 * x[0],
                p.r2 * p.k2 * x[1] / p.n1,
                p.r2 * (-1.0 + p.k2 * x[0] / p.n1 - 2.0 * x[1] / p.n2 - p.h2 * x[2]),
                -p.r2 * p.h2 * x[1],
                0.0,
                0.0,
                1.0,
            ],
        )
    }

    /// Coexistence state `(N1(k1+1), N2(k2−1), 0)/(1 + k1k2)`.
    pub fn equilibrium(&self) -> Result<[f64; 3]> {
        if !(self.k2 > 1.0) {
            return Err(Error::NoPositiveEquilibrium(self.k2));
        }
        let den = 1.0 + self.k1 * self.k2;
        Ok([self.n1 * (self.k1 + 1.0) / den, self.n2 * (self.k2 - 1.0) / den, 0.0])
    }

    pub fn jacobian_at_equilibrium(&self) -> Result<DMatrix<f64>> {
        Ok(self.jacobian(&self.equilibrium()?))
    }
}

/// Indices of the basis modes with `μ = 1`.
pub fn algebraic_kernel(basis: &Basis) -> Vec<usize> {
    basis.modes.iter().enumerate().filter(|(_, m)| (m.mu - 1.0).abs() <= KERNEL_TOL).map(|(i, _)| i).collect()
}

fn axis_peak(mode: &Mode, lengths: &[f64]) -> f64 {
    const SAMPLES: usize = 4001;
    mode.factors
        .iter()
        .zip(lengths)
        .map(|(f, &l)| (0..SAMPLES).map(|i| f.value(l * i as f64 / (SAMPLES - 1) as f64).abs()).fold(0.0, f64::max))
        .product()
}

/// `amplitude · φ/max|φ|` for the first kernel mode, or `None` when the
/// kernel is trivial.
pub fn kernel_field(basis: &Basis, amplitude: f64) -> Option<FieldFn> {
    let idx = *algebraic_kernel(basis).first()?;
    let mode = basis.modes[idx].clone();
    let peak = axis_peak(&mode, basis.domain.lengths());
    Some(Arc::new(move |z: &[f64]| amplitude * mode.value(z) / peak))
}

/// Simulator model with `x3` held at `amplitude` times the unit-peak kernel
/// field (zero when the kernel is trivial).
pub fn wetland_model(params: WetlandParams, basis: &Basis, amplitude: f64) -> SemilinearModel {
    let x3: FieldFn = kernel_field(basis, amplitude).unwrap_or_else(|| Arc::new(|_: &[f64]| 0.0));
    SemilinearModel {
        e: params.e(),
        d: params.d(),
        reaction: Arc::new(move |x, out| params.reaction(x, out)),
        jacobian: Arc::new(move |x| params.jacobian(x)),
        algebraic: AlgebraicHandling::Held(vec![x3]),
    }
}

/// `x1 = 0.3`, `x2 = 0.3(1 + cos z1)`; `x3` is overwritten by the simulator.
pub fn wetland_initial() -> Vec<FieldFn> {
    vec![Arc::new(|_: &[f64]| 0.3), Arc::new(|z: &[f64]| 0.3 * (1.0 + z[0].cos())), Arc::new(|_: &[f64]| 0.0)]
}

pub fn wetland_setup(domain: BoxDomain, nodes: Vec<usize>) -> SimSetup {
    let dim = domain.dim();
    SimSetup { domain, bc: vec![BoundarySpec::neumann(dim)], nodes, initial: wetland_initial() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WetlandClassification {
    pub equilibrium: [f64; 3],
    pub a_j: DMatrix<f64>,
    pub certificate: DecayCertificate,
    /// `d1·μ1 − ‖A_J‖` with `d1` the smallest diffusion coefficient.
    pub margin: f64,
    /// `n·d1·μ1 − ‖A_J‖`.
    pub weighted_margin: f64,
    pub spectrum: SpectrumReport,
}

pub fn classify_stability(params: WetlandParams, basis: &Basis, count: usize) -> Result<WetlandClassification> {
    let equilibrium = params.equilibrium()?;
    let a_j = params.jacobian(&equilibrium);
    let mu1 = crate::eigenbasis::poincare_constant(basis)?;
    let certificate = delta_criterion(&params.e(), &params.d(), &a_j, mu1);
    let spectrum = spectrum_report(&params.d(), &a_j, basis, count)?;
    Ok(WetlandClassification {
        equilibrium,
        margin: certificate.margin(),
        weighted_margin: certificate.dimension_weighted_margin(),
        a_j,
        certificate,
        spectrum,
    })
}
