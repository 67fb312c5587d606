//! Machine-readable run summaries.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pdae_core::pencil::PencilVerdict;
use pdae_core::sim::SimStatus;
use pdae_core::stability::{DecayCertificate, LmiCertificate, SpectrumReport};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub n: usize,
    pub modes: usize,
    pub admissible: Option<bool>,
    pub spectrum: Option<SpectrumSummary>,
    pub verdicts: Vec<VerdictSummary>,
    pub lmi: Option<LmiSummary>,
    pub delta: Option<DeltaSummary>,
    pub modal: Option<ModalRunSummary>,
    pub simulation: Option<SimulationSummary>,
    pub files: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl RunSummary {
    pub fn new(command: &str, seed: u64, n: usize, modes: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            seed,
            n,
            modes,
            admissible: None,
            spectrum: None,
            verdicts: Vec::new(),
            lmi: None,
            delta: None,
            modal: None,
            simulation: None,
            files: Vec::new(),
            diagnostics: Vec::new(),
        }
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeLambda {
    pub j: usize,
    pub value: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub lambdas: Vec<ModeLambda>,
    pub g: usize,
    pub epsilon: Option<f64>,
    pub all_real: bool,
    pub tail_negative_from: Option<usize>,
}

impl From<&SpectrumReport> for SpectrumSummary {
    fn from(r: &SpectrumReport) -> Self {
        Self {
            lambdas: r.lambdas.iter().map(|l| ModeLambda { j: l.j, value: pair(l.value) }).collect(),
            g: r.g,
            epsilon: r.epsilon.and_then(finite),
            all_real: r.all_real,
            tail_negative_from: r.tail_negative_from,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub j: usize,
    pub mu: f64,
    pub regular: bool,
    pub r: usize,
    pub nu: usize,
    pub impulse_free: bool,
    pub admissible: bool,
    pub finite_spectrum: Vec<[f64; 2]>,
    /// Feasibility of the certificate built for this mode's pencil.
    pub lmi_feasible: Option<bool>,
}

impl VerdictSummary {
    pub fn new(j: usize, mu: f64, v: &PencilVerdict, lmi_feasible: Option<bool>) -> Self {
        Self {
            j,
            mu,
            regular: v.regular,
            r: v.r,
            nu: v.nu,
            impulse_free: v.impulse_free,
            admissible: v.admissible,
            finite_spectrum: v.finite_spectrum.iter().copied().map(pair).collect(),
            lmi_feasible,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiSummary {
    pub lambda1: f64,
    pub p: Vec<Vec<f64>>,
    pub sym_residual: f64,
    pub semidef_margin: f64,
    pub neg_margin: f64,
    pub feasible: bool,
    pub diagnostics: Vec<String>,
}

impl LmiSummary {
    pub fn new(lambda1: f64, c: &LmiCertificate) -> Self {
        Self {
            lambda1,
            p: rows(&c.p),
            sym_residual: c.sym_residual,
            semidef_margin: c.semidef_margin,
            neg_margin: c.neg_margin,
            feasible: c.feasible,
            diagnostics: c.diagnostics.clone(),
        }
    }
}

/// Reference row for the wetland linearization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub h1: f64,
    pub h2: f64,
    pub norm_a_reference: f64,
    pub margin_reference: f64,
    pub norm_a_error: f64,
    /// Difference of `n·d1·μ1 − ‖A‖` from the reference margin.
    pub weighted_margin_error: f64,
    /// Difference of `d1·μ1 − ‖A‖` from the reference margin.
    pub margin_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub d1: f64,
    pub mu1: f64,
    pub norm_a: f64,
    pub norm_e: f64,
    pub delta: Option<f64>,
    pub margin: f64,
    pub weighted_margin: f64,
    pub applicable: bool,
    pub reference: Option<ReferenceRow>,
}

impl DeltaSummary {
    pub fn new(c: &DecayCertificate, reference: Option<ReferenceRow>) -> Self {
        Self {
            d1: c.d1,
            mu1: c.mu1,
            norm_a: c.norm_a,
            norm_e: c.norm_e,
            delta: finite(c.delta),
            margin: c.margin(),
            weighted_margin: c.dimension_weighted_margin(),
            applicable: c.applicable,
            reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalRunSummary {
    pub samples: usize,
    pub nus: Vec<usize>,
    pub max_consistency_residual: f64,
    pub final_field_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatusLabel {
    Converged,
    Completed,
    Diverged,
}

impl From<SimStatus> for StatusLabel {
    fn from(s: SimStatus) -> Self {
        match s {
            SimStatus::Converged => Self::Converged,
            SimStatus::Completed => Self::Completed,
            SimStatus::Diverged { .. } => Self::Diverged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub status: StatusLabel,
    pub t_final: f64,
    pub steps: usize,
    pub dt: f64,
    pub final_state_max: f64,
    pub steady_residual: Option<f64>,
    pub energy_rate: Option<f64>,
    pub deviation_rate: Option<f64>,
    /// `max |x_i − x_i*|` over the nodes and the differential components.
    pub distance_to_equilibrium: Option<f64>,
}
