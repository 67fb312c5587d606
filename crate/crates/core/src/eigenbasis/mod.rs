//! Laplacian eigenbases on axis-aligned boxes.
//!
//! Eigenfunctions are separable products of one-dimensional Sturm–Liouville
//! modes, `φ(z) = Π ψ_i(z_i)`, normalized in `L²(Ω)` and ordered by
//! eigenvalue `μ` of `-Δ` (ties broken lexicographically on the multi-index).

pub mod grid;
pub mod quadrature;
pub mod sturm;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

pub use grid::{grad_field, Grid, GridField};
pub use quadrature::{GaussRule, TensorRule};
pub use sturm::{sl_modes_1d, AxisBc, AxisMode, BcKind, FaceBc};

use crate::error::{Error, Result};

/// Default Gauss nodes per axis for projections.
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

/// Eigenvalues below this are treated as the constant mode.
pub const ZERO_MODE_TOL: f64 = 1e-12;

/// Scalar field `z ↦ value`, shareable across threads.
pub type FieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lengths: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidInput("domain needs at least one axis".into()));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidInput(format!("side length {l} must be positive")));
        }
        Ok(Self { lengths })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }
}

/// Homogeneous Robin data for every axis of the box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub axes: Vec<AxisBc>,
}

impl BoundarySpec {
    pub fn new(axes: Vec<AxisBc>) -> Result<Self> {
        for ax in &axes {
            ax.low.normalized()?;
            ax.high.normalized()?;
        }
        Ok(Self { axes })
    }

    pub fn uniform(axis: AxisBc, dim: usize) -> Self {
        Self { axes: vec![axis; dim] }
    }

    pub fn neumann(dim: usize) -> Self {
        Self::uniform(AxisBc::neumann(), dim)
    }

    pub fn dirichlet(dim: usize) -> Self {
        Self::uniform(AxisBc::dirichlet(), dim)
    }

    /// `Dirichlet` or `Neumann` when every face agrees; `Robin` otherwise.
    pub fn kind(&self) -> BcKind {
        let faces = self.axes.iter().flat_map(|a| [a.low.kind(), a.high.kind()]);
        let kinds: HashSet<BcKind> = faces.collect();
        match kinds.len() {
            1 => *kinds.iter().next().unwrap_or(&BcKind::Robin),
            _ => BcKind::Robin,
        }
    }
}

/// One tensor-product eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub multi_index: Vec<usize>,
    /// Eigenvalue of `-Δ`.
    pub mu: f64,
    pub factors: Vec<AxisMode>,
}

impl Mode {
    pub fn axis_roots(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.k).collect()
    }

    pub fn norm_constants(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.norm_constant).collect()
    }

    /// The constant (`μ = 0`) Neumann mode.
    pub fn is_constant(&self) -> bool {
        self.mu < ZERO_MODE_TOL
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        self.factors.iter().zip(z).map(|(f, &x)| f.value(x)).product()
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let vals: Vec<f64> = self.factors.iter().zip(z).map(|(f, &x)| f.value(x)).collect();
        (0..self.factors.len())
            .map(|a| {
                let mut g = self.factors[a].derivative(z[a]);
                for (b, v) in vals.iter().enumerate() {
                    if b != a {
                        g *= v;
                    }
                }
                g
            })
            .collect()
    }

    /// `∫_Ω φ dz`, exact.
    pub fn integral(&self, domain: &BoxDomain) -> f64 {
        self.factors.iter().zip(domain.lengths()).map(|(f, &l)| f.integral(l)).product()
    }
}

/// Truncated orthonormal eigenbasis with its projection quadrature.
#[derive(Debug, Clone)]
pub struct Basis {
    pub domain: BoxDomain,
    pub bc: BoundarySpec,
    pub modes: Vec<Mode>,
    pub quadrature: TensorRule,
    axis_modes: Vec<Vec<AxisMode>>,
    // axis -> 1-D mode -> quadrature node
    quad_tables: Vec<Vec<Vec<f64>>>,
}

impl Basis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn mus(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.mu).collect()
    }

    /// Largest `|⟨φ_i, φ_j⟩ - δ_ij|` under the configured quadrature.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0_f64;
        let vals = self.mode_values_at_quadrature();
        let weights = self.quadrature_weights();
        for i in 0..n {
            for j in i..n {
                let g: f64 = weights.iter().enumerate().map(|(q, w)| w * vals[i][q] * vals[j][q]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    fn quadrature_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.quadrature.len());
        self.quadrature.for_each(|_, _, wt| w.push(wt));
        w
    }

    fn quadrature_indices(&self) -> Vec<Vec<usize>> {
        let mut idx = Vec::with_capacity(self.quadrature.len());
        self.quadrature.for_each(|i, _, _| idx.push(i.to_vec()));
        idx
    }

    fn mode_values_at_quadrature(&self) -> Vec<Vec<f64>> {
        let idx = self.quadrature_indices();
        self.modes
            .iter()
            .map(|m| {
                idx.iter()
                    .map(|ii| m.multi_index.iter().enumerate().map(|(a, &k)| self.quad_tables[a][k][ii[a]]).product())
                    .collect()
            })
            .collect()
    }

    /// One-dimensional modes available on each axis.
    pub fn axis_modes(&self) -> &[Vec<AxisMode>] {
        &self.axis_modes
    }
}

#[derive(PartialEq)]
struct Candidate {
    mu: f64,
    index: Vec<usize>,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // reversed so that BinaryHeap pops the smallest eigenvalue first
    fn cmp(&self, other: &Self) -> Ordering {
        other.mu.total_cmp(&self.mu).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn tie_tolerance(mu: f64) -> f64 {
    1e-12 * mu.abs().max(1.0)
}

/// Ascending by `μ`, with eigenvalues within rounding of each other treated
/// as ties and ordered by multi-index.
pub fn compare_modes(a: (f64, &[usize]), b: (f64, &[usize])) -> Ordering {
    if (a.0 - b.0).abs() <= tie_tolerance(a.0.max(b.0)) {
        a.1.cmp(b.1)
    } else {
        a.0.total_cmp(&b.0)
    }
}

/// The `count` smallest-eigenvalue tensor modes, using the default quadrature.
pub fn tensor_modes(domain: &BoxDomain, bc: &BoundarySpec, count: usize) -> Result<Basis> {
    tensor_modes_with(domain, bc, count, DEFAULT_QUADRATURE_NODES)
}

pub fn tensor_modes_with(
    domain: &BoxDomain,
    bc: &BoundarySpec,
    count: usize,
    quadrature_nodes: usize,
) -> Result<Basis> {
    if count == 0 {
        return Err(Error::InvalidInput("mode count must be at least 1".into()));
    }
    if quadrature_nodes == 0 {
        return Err(Error::InvalidInput("quadrature needs at least one node".into()));
    }
    if bc.axes.len() != domain.dim() {
        return Err(Error::Dimension {
            name: "boundary spec".into(),
            expected: format!("{} axes", domain.dim()),
            actual: format!("{} axes", bc.axes.len()),
        });
    }
    let axis_modes =
        domain.lengths().iter().zip(&bc.axes).map(|(&l, ax)| sl_modes_1d(l, ax, count)).collect::<Result<Vec<_>>>()?;

    let d = domain.dim();
    let mu_of = |idx: &[usize]| -> f64 { idx.iter().enumerate().map(|(a, &k)| axis_modes[a][k].eigenvalue()).sum() };

    // Best-first walk over the index lattice; eigenvalues grow along every axis.
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    let start = vec![0usize; d];
    heap.push(Candidate { mu: mu_of(&start), index: start.clone() });
    seen.insert(start);
    let mut picked: Vec<Candidate> = Vec::new();
    while let Some(c) = heap.pop() {
        if picked.len() >= count {
            let last = picked[picked.len() - 1].mu;
            if c.mu - last > tie_tolerance(last) {
                break;
            }
        }
        for a in 0..d {
            if c.index[a] + 1 < count {
                let mut next = c.index.clone();
                next[a] += 1;
                if seen.insert(next.clone()) {
                    heap.push(Candidate { mu: mu_of(&next), index: next });
                }
            }
        }
        picked.push(c);
    }
    picked.sort_by(|x, y| compare_modes((x.mu, &x.index), (y.mu, &y.index)));
    picked.truncate(count);

    let modes = picked
        .into_iter()
        .map(|c| Mode {
            factors: c.index.iter().enumerate().map(|(a, &k)| axis_modes[a][k]).collect(),
            multi_index: c.index,
            mu: c.mu,
        })
        .collect();

    let quadrature = TensorRule::on_box(domain.lengths(), quadrature_nodes);
    let quad_tables = axis_modes
        .iter()
        .zip(&quadrature.axes)
        .map(|(ms, rule)| ms.iter().map(|m| rule.nodes.iter().map(|&z| m.value(z)).collect()).collect())
        .collect();

    Ok(Basis { domain: domain.clone(), bc: bc.clone(), modes, quadrature, axis_modes, quad_tables })
}

/// Coefficients `⟨f, φ_j⟩` (one `n`-vector per mode) of callable component fields.
pub fn project(fields: &[FieldFn], n: usize, basis: &Basis) -> Result<Vec<DVector<f64>>> {
    if fields.len() != n {
        return Err(Error::Dimension {
            name: "projected field components".into(),
            expected: n.to_string(),
            actual: fields.len().to_string(),
        });
    }
    let mut samples = Vec::with_capacity(basis.quadrature.len() * n);
    let mut weights = Vec::with_capacity(basis.quadrature.len());
    let mut indices = Vec::with_capacity(basis.quadrature.len());
    basis.quadrature.for_each(|idx, z, w| {
        for f in fields {
            samples.push(f(z));
        }
        weights.push(w);
        indices.push(idx.to_vec());
    });
    let coeffs = basis
        .modes
        .par_iter()
        .map(|m| {
            let mut c = DVector::zeros(n);
            for (q, idx) in indices.iter().enumerate() {
                let phi: f64 =
                    m.multi_index.iter().enumerate().map(|(a, &k)| basis.quad_tables[a][k][idx[a]]).product();
                let wphi = weights[q] * phi;
                for comp in 0..n {
                    c[comp] += wphi * samples[q * n + comp];
                }
            }
            c
        })
        .collect();
    Ok(coeffs)
}

/// Coefficients of nodal data by trapezoid quadrature on its own grid.
pub fn project_grid(field: &GridField, basis: &Basis) -> Result<Vec<DVector<f64>>> {
    if field.grid.dim() != basis.dim() {
        return Err(Error::Dimension {
            name: "grid field".into(),
            expected: format!("{} axes", basis.dim()),
            actual: format!("{} axes", field.grid.dim()),
        });
    }
    let weights = field.grid.trapezoid_weights();
    let points = field.grid.points();
    let n = field.ncomp;
    Ok(basis
        .modes
        .par_iter()
        .map(|m| {
            let mut c = DVector::zeros(n);
            for (node, p) in points.iter().enumerate() {
                let wphi = weights[node] * m.value(p);
                for comp in 0..n {
                    c[comp] += wphi * field.get(node, comp);
                }
            }
            c
        })
        .collect())
}

/// `Σ_j c_j φ_j(z)` at every grid node, summed in ascending mode order.
pub fn reconstruct(coeffs: &[DVector<f64>], basis: &Basis, grid: &Grid) -> Result<GridField> {
    if coeffs.len() > basis.len() {
        return Err(Error::Dimension {
            name: "coefficients".into(),
            expected: format!("at most {}", basis.len()),
            actual: coeffs.len().to_string(),
        });
    }
    if grid.dim() != basis.dim() {
        return Err(Error::Dimension {
            name: "grid".into(),
            expected: format!("{} axes", basis.dim()),
            actual: format!("{} axes", grid.dim()),
        });
    }
    let n = coeffs.first().map_or(0, |c| c.len());
    if coeffs.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidInput("coefficient vectors differ in length".into()));
    }
    let tables: Vec<Vec<Vec<f64>>> = basis
        .axis_modes
        .iter()
        .zip(&grid.axes)
        .map(|(ms, ax)| ms.iter().map(|m| ax.iter().map(|&z| m.value(z)).collect()).collect())
        .collect();
    let mut values = vec![0.0; grid.len() * n];
    values.par_chunks_mut(n.max(1)).enumerate().for_each(|(node, out)| {
        if n == 0 {
            return;
        }
        let idx = grid.multi_index(node);
        for (m, c) in basis.modes.iter().zip(coeffs) {
            let phi: f64 = m.multi_index.iter().enumerate().map(|(a, &k)| tables[a][k][idx[a]]).product();
            for comp in 0..n {
                out[comp] += c[comp] * phi;
            }
        }
    });
    GridField::new(grid.clone(), n, values)
}

/// Smallest positive eigenvalue of `-Δ` in the truncated basis.
pub fn poincare_constant(basis: &Basis) -> Result<f64> {
    basis
        .modes
        .iter()
        .map(|m| m.mu)
        .filter(|&mu| mu > ZERO_MODE_TOL)
        .min_by(f64::total_cmp)
        .ok_or(Error::NoPositiveEigenvalue(basis.len()))
}
