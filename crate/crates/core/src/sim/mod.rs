//! Finite-difference simulation of semilinear systems
//! `E x_t = D Δx + f(x)` on uniform box grids.
//!
//! Rows where `E` vanishes are algebraic. The remaining block `E_dd` must be
//! invertible and the differential rows must not weight the time derivative
//! of algebraic components. Differential components are advanced with SBDF2
//! (backward Euler for the first step): the diagonal diffusion of
//! `E_dd⁻¹ D` is implicit, cross-diffusion and reaction are extrapolated.
//! Algebraic components are either prescribed or solved by Newton at every
//! step.

pub mod banded;
pub mod wetland;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::eigenbasis::{BoundarySpec, BoxDomain, FieldFn, Grid, GridField};
use crate::error::{Error, Result};
use crate::linalg::inverse;
use crate::stability::energy::{deviation_from_average, energy_integral};
use banded::{BandLu, BandMatrix};

/// Pointwise reaction `x ↦ f(x)`.
pub type ReactionFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Pointwise Jacobian `x ↦ ∂f/∂x`.
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 25;
/// Chord iterations allowed before the Newton matrix is refactored.
const CHORD_REFRESH: usize = 4;

#[derive(Clone)]
pub enum AlgebraicHandling {
    /// Solve the algebraic rows for the algebraic components each step.
    Newton,
    /// Hold each algebraic component at a prescribed field.
    Held(Vec<FieldFn>),
}

impl fmt::Debug for AlgebraicHandling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Newton => write!(f, "Newton"),
            Self::Held(v) => write!(f, "Held({} fields)", v.len()),
        }
    }
}

#[derive(Clone)]
pub struct SemilinearModel {
    pub e: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub reaction: ReactionFn,
    pub jacobian: JacobianFn,
    pub algebraic: AlgebraicHandling,
}

impl fmt::Debug for SemilinearModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemilinearModel")
            .field("e", &self.e)
            .field("d", &self.d)
            .field("algebraic", &self.algebraic)
            .finish_non_exhaustive()
    }
}

impl SemilinearModel {
    /// `f(x) = A x`.
    pub fn linear(e: DMatrix<f64>, d: DMatrix<f64>, a: DMatrix<f64>) -> Self {
        let a_f = a.clone();
        Self {
            e,
            d,
            reaction: Arc::new(move |x, out| {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..x.len()).map(|k| a_f[(i, k)] * x[k]).sum();
                }
            }),
            jacobian: Arc::new(move |_| a.clone()),
            algebraic: AlgebraicHandling::Newton,
        }
    }

    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    /// Rows of `E` that vanish identically.
    pub fn algebraic_rows(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.e.row(i).iter().all(|&v| v == 0.0)).collect()
    }

    pub fn differential_rows(&self) -> Vec<usize> {
        let alg = self.algebraic_rows();
        (0..self.n()).filter(|i| !alg.contains(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `snapshot_stride`-th state (plus the first and last).
    pub snapshot_stride: usize,
    /// Converged when the final differential residual `‖DΔx + f(x)‖∞` is below this.
    pub steady_tol: f64,
    /// Diverged once `‖x‖∞` exceeds this.
    pub divergence_bound: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 0.01, t_end: 100.0, snapshot_stride: 100, steady_tol: 1e-6, divergence_bound: 1e6 }
    }
}

#[derive(Clone)]
pub struct SimSetup {
    pub domain: BoxDomain,
    /// One spec shared by every component, or one per component.
    pub bc: Vec<BoundarySpec>,
    /// Grid nodes per axis, faces included.
    pub nodes: Vec<usize>,
    /// Initial field per component. Algebraic components are overwritten.
    pub initial: Vec<FieldFn>,
}

impl fmt::Debug for SimSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimSetup")
            .field("domain", &self.domain)
            .field("bc", &self.bc)
            .field("nodes", &self.nodes)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimStatus {
    /// Ran to the end and reached the steady tolerance.
    Converged,
    /// Ran to the end without reaching it.
    Completed,
    Diverged {
        t: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    /// `∫ x_c` per component.
    pub mass: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// `½ ∫ Σ ∂xᵀ E ∂x`.
    pub energy: f64,
    /// `∫ ‖x − x_M‖`.
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub grid: Grid,
    pub dt: f64,
    pub steps: usize,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<GridField>,
    /// One entry for the initial state and one per completed step.
    pub diagnostics: Vec<StepDiagnostics>,
    pub status: SimStatus,
    pub steady_residual: f64,
    pub final_state: GridField,
}

/// Discrete Laplacian for one component with ghost-node reflection at
/// Neumann and Robin faces. Nodes on a Dirichlet face get a zero row and are
/// flagged as fixed.
pub fn laplacian(grid: &Grid, bc: &BoundarySpec) -> Result<(BandMatrix, Vec<bool>)> {
    let dim = grid.dim();
    if bc.axes.len() != dim {
        return Err(Error::Dimension {
            name: "boundary spec".into(),
            expected: format!("{dim} axes"),
            actual: format!("{}", bc.axes.len()),
        });
    }
    let shape = grid.shape();
    if shape.iter().any(|&s| s < 3) {
        return Err(Error::InvalidInput("simulation grid needs at least 3 nodes per axis".into()));
    }
    let strides = grid.strides();
    let bw = strides.iter().copied().max().unwrap_or(1);
    let n = grid.len();
    let mut lap = BandMatrix::zeros(n, bw, bw);
    let mut fixed = vec![false; n];
    let faces: Vec<_> =
        bc.axes.iter().map(|ax| Ok((ax.low.normalized()?, ax.high.normalized()?))).collect::<Result<_>>()?;
    for node in 0..n {
        let idx = grid.multi_index(node);
        for a in 0..dim {
            let s = strides[a];
            let h = grid.axes[a][1] - grid.axes[a][0];
            let h2 = h * h;
            let i = idx[a];
            if i == 0 || i == shape[a] - 1 {
                let (face, inward) = if i == 0 { (faces[a].0, node + s) } else { (faces[a].1, node - s) };
                if face.q == 0.0 {
                    fixed[node] = true;
                    continue;
                }
                // ghost = inward − 2h(p/q)·u
                let rho = face.p / face.q;
                lap.add(node, node, -2.0 / h2 - 2.0 * rho / h);
                lap.add(node, inward, 2.0 / h2);
            } else {
                lap.add(node, node - s, 1.0 / h2);
                lap.add(node, node, -2.0 / h2);
                lap.add(node, node + s, 1.0 / h2);
            }
        }
    }
    for (node, &f) in fixed.iter().enumerate() {
        if f {
            lap.set_row_identity(node, 0.0);
        }
    }
    Ok((lap, fixed))
}

fn component_bcs(bc: &[BoundarySpec], n: usize) -> Result<Vec<BoundarySpec>> {
    match bc.len() {
        1 => Ok(vec![bc[0].clone(); n]),
        k if k == n => Ok(bc.to_vec()),
        k => Err(Error::Dimension {
            name: "boundary specs".into(),
            expected: format!("1 or {n}"),
            actual: k.to_string(),
        }),
    }
}

struct NewtonSolver {
    alg: Vec<usize>,
    lu: Option<BandLu>,
    uses: usize,
    kl: usize,
}

struct Stepper<'a> {
    model: &'a SemilinearModel,
    n: usize,
    nodes: usize,
    dif: Vec<usize>,
    alg: Vec<usize>,
    /// `E_dd⁻¹ D_d·`
    g: DMatrix<f64>,
    e_dd_inv: DMatrix<f64>,
    laps: Vec<BandMatrix>,
    fixed: Vec<Vec<bool>>,
    held: Option<Vec<Vec<f64>>>,
    newton: Option<NewtonSolver>,
}

impl<'a> Stepper<'a> {
    fn lap_apply(&self, comp: usize, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes];
        self.laps[comp].mul_vec(u, &mut out);
        out
    }

    fn node_state(u: &[Vec<f64>], node: usize, buf: &mut [f64]) {
        for (c, b) in buf.iter_mut().enumerate() {
            *b = u[c][node];
        }
    }

    /// Explicit part of the differential right-hand side per differential row.
    fn explicit(&self, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let nd = self.dif.len();
        let laps: Vec<Vec<f64>> = (0..self.n).map(|c| self.lap_apply(c, &u[c])).collect();
        let mut out = vec![vec![0.0; self.nodes]; nd];
        let mut x = vec![0.0; self.n];
        let mut fx = vec![0.0; self.n];
        for node in 0..self.nodes {
            Self::node_state(u, node, &mut x);
            (self.model.reaction)(&x, &mut fx);
            for k in 0..nd {
                let mut acc = 0.0;
                for (kk, &r) in self.dif.iter().enumerate() {
                    acc += self.e_dd_inv[(k, kk)] * fx[r];
                }
                for m in 0..self.n {
                    if m != self.dif[k] {
                        acc += self.g[(k, m)] * laps[m][node];
                    }
                }
                out[k][node] = acc;
            }
        }
        out
    }

    fn implicit_coef(&self, k: usize) -> f64 {
        self.g[(k, self.dif[k])]
    }

    fn implicit_matrices(&self, alpha: f64, beta: f64) -> Result<Vec<BandLu>> {
        (0..self.dif.len())
            .map(|k| {
                let c = self.dif[k];
                let lap = &self.laps[c];
                lap.identity_like().combine(alpha, lap, -beta * self.implicit_coef(k)).factor()
            })
            .collect()
    }

    /// Residual of the algebraic rows, interleaved as `node·n_a + c`.
    fn algebraic_residual(&self, u: &[Vec<f64>]) -> Vec<f64> {
        let na = self.alg.len();
        let laps: Vec<Vec<f64>> = (0..self.n).map(|c| self.lap_apply(c, &u[c])).collect();
        let mut res = vec![0.0; self.nodes * na];
        let mut x = vec![0.0; self.n];
        let mut fx = vec![0.0; self.n];
        for node in 0..self.nodes {
            Self::node_state(u, node, &mut x);
            (self.model.reaction)(&x, &mut fx);
            for (c, &r) in self.alg.iter().enumerate() {
                res[node * na + c] = if self.fixed[r][node] {
                    u[r][node]
                } else {
                    fx[r] + (0..self.n).map(|m| self.model.d[(r, m)] * laps[m][node]).sum::<f64>()
                };
            }
        }
        res
    }

    fn newton_matrix(&self, u: &[Vec<f64>], kl: usize) -> Result<BandLu> {
        let na = self.alg.len();
        let size = self.nodes * na;
        let mut m = BandMatrix::zeros(size, kl, kl);
        let mut x = vec![0.0; self.n];
        for node in 0..self.nodes {
            Self::node_state(u, node, &mut x);
            let jac = (self.model.jacobian)(&x);
            for (c, &r) in self.alg.iter().enumerate() {
                let row = node * na + c;
                if self.fixed[r][node] {
                    m.add(row, row, 1.0);
                    continue;
                }
                for (cc, &rc) in self.alg.iter().enumerate() {
                    m.add(row, node * na + cc, jac[(r, rc)]);
                    let dcoef = self.model.d[(r, rc)];
                    if dcoef != 0.0 {
                        let lap = &self.laps[rc];
                        let lo = node.saturating_sub(kl / na.max(1));
                        let hi = (node + kl / na.max(1)).min(self.nodes - 1);
                        for other in lo..=hi {
                            let v = lap.get(node, other);
                            if v != 0.0 {
                                m.add(row, other * na + cc, dcoef * v);
                            }
                        }
                    }
                }
            }
        }
        m.factor()
    }

    fn solve_algebraic(&mut self, u: &mut [Vec<f64>], t: f64) -> Result<()> {
        if let Some(held) = &self.held {
            for (c, &r) in self.alg.iter().enumerate() {
                u[r].copy_from_slice(&held[c]);
            }
            return Ok(());
        }
        let Some(mut solver) = self.newton.take() else {
            return Ok(());
        };
        let na = solver.alg.len();
        let mut last = f64::INFINITY;
        let mut result = Err(Error::NewtonFailure { t, update: last });
        for _ in 0..NEWTON_MAX_ITER {
            if solver.lu.is_none() || solver.uses >= CHORD_REFRESH {
                solver.lu = Some(self.newton_matrix(u, solver.kl)?);
                solver.uses = 0;
            }
            let mut step = self.algebraic_residual(u);
            solver.lu.as_ref().expect("factored above").solve(&mut step);
            solver.uses += 1;
            let mut scale = 1.0_f64;
            last = 0.0;
            for node in 0..self.nodes {
                for c in 0..na {
                    let r = self.alg[c];
                    u[r][node] -= step[node * na + c];
                    last = last.max(step[node * na + c].abs());
                    scale = scale.max(u[r][node].abs());
                }
            }
            if !last.is_finite() {
                break;
            }
            if last <= NEWTON_TOL * scale {
                result = Ok(());
                break;
            }
        }
        if result.is_err() {
            result = Err(Error::NewtonFailure { t, update: last });
        } else {
            // a converged chord matrix stays good for the next step
            solver.uses = 0;
        }
        self.newton = Some(solver);
        result
    }

    fn steady_residual(&self, u: &[Vec<f64>]) -> f64 {
        let laps: Vec<Vec<f64>> = (0..self.n).map(|c| self.lap_apply(c, &u[c])).collect();
        let mut x = vec![0.0; self.n];
        let mut fx = vec![0.0; self.n];
        let mut worst = 0.0_f64;
        for node in 0..self.nodes {
            Self::node_state(u, node, &mut x);
            (self.model.reaction)(&x, &mut fx);
            for &r in &self.dif {
                if self.fixed[r][node] {
                    continue;
                }
                let v = fx[r] + (0..self.n).map(|m| self.model.d[(r, m)] * laps[m][node]).sum::<f64>();
                worst = worst.max(v.abs());
            }
        }
        worst
    }
}

fn to_field(grid: &Grid, u: &[Vec<f64>]) -> GridField {
    let n = u.len();
    let nodes = grid.len();
    let mut values = vec![0.0; nodes * n];
    for (c, comp) in u.iter().enumerate() {
        for (node, &v) in comp.iter().enumerate() {
            values[node * n + c] = v;
        }
    }
    GridField { grid: grid.clone(), ncomp: n, values }
}

fn diagnostics(t: f64, field: &GridField, e: &DMatrix<f64>) -> Result<StepDiagnostics> {
    let n = field.ncomp;
    let mut min = vec![f64::INFINITY; n];
    let mut max = vec![f64::NEG_INFINITY; n];
    for (i, &v) in field.values.iter().enumerate() {
        let c = i % n;
        min[c] = min[c].min(v);
        max[c] = max[c].max(v);
    }
    Ok(StepDiagnostics {
        t,
        mass: field.integrate(),
        min,
        max,
        energy: energy_integral(field, e)?,
        deviation: deviation_from_average(field),
    })
}

/// Runs the simulation. The step count is `⌈t_end/dt⌉` and the step is
/// shrunk uniformly so the run ends exactly at `t_end`.
pub fn simulate(model: &SemilinearModel, setup: &SimSetup, config: &SimConfig) -> Result<SimResult> {
    let n = model.n();
    if model.e.ncols() != n || model.d.shape() != (n, n) {
        return Err(Error::Dimension {
            name: "E, D".into(),
            expected: format!("{n}x{n}"),
            actual: format!("{:?}, {:?}", model.e.shape(), model.d.shape()),
        });
    }
    if !(config.dt > 0.0) || !config.dt.is_finite() {
        return Err(Error::InvalidInput(format!("time step must be positive, got {}", config.dt)));
    }
    if !(config.t_end > 0.0) || !config.t_end.is_finite() {
        return Err(Error::InvalidInput(format!("end time must be positive, got {}", config.t_end)));
    }
    if setup.initial.len() != n {
        return Err(Error::Dimension {
            name: "initial fields".into(),
            expected: n.to_string(),
            actual: setup.initial.len().to_string(),
        });
    }
    let dim = setup.domain.dim();
    if setup.nodes.len() != dim {
        return Err(Error::Dimension {
            name: "grid resolution".into(),
            expected: format!("{dim} axes"),
            actual: setup.nodes.len().to_string(),
        });
    }
    let grid = Grid::uniform(setup.domain.lengths(), &setup.nodes)?;
    let nodes = grid.len();
    let bcs = component_bcs(&setup.bc, n)?;
    let mut laps = Vec::with_capacity(n);
    let mut fixed = Vec::with_capacity(n);
    for bc in &bcs {
        let (l, f) = laplacian(&grid, bc)?;
        laps.push(l);
        fixed.push(f);
    }

    let dif = model.differential_rows();
    let alg = model.algebraic_rows();
    for &r in &dif {
        for &c in &alg {
            if model.e[(r, c)] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "E[{r}, {c}] couples a differential row to the derivative of an algebraic component"
                )));
            }
        }
    }
    let e_dd = DMatrix::from_fn(dif.len(), dif.len(), |i, k| model.e[(dif[i], dif[k])]);
    let e_dd_inv = inverse(&e_dd, "differential block of E")?;
    let d_rows = DMatrix::from_fn(dif.len(), n, |i, m| model.d[(dif[i], m)]);
    let g = &e_dd_inv * d_rows;

    let points = grid.points();
    let held = match &model.algebraic {
        AlgebraicHandling::Held(fields) => {
            if fields.len() != alg.len() {
                return Err(Error::Dimension {
                    name: "held algebraic fields".into(),
                    expected: alg.len().to_string(),
                    actual: fields.len().to_string(),
                });
            }
            Some(fields.iter().map(|f| points.iter().map(|z| f(z)).collect()).collect())
        }
        AlgebraicHandling::Newton => None,
    };
    let newton = (held.is_none() && !alg.is_empty()).then(|| {
        let stride = grid.strides().into_iter().max().unwrap_or(1);
        let na = alg.len();
        NewtonSolver { alg: alg.clone(), lu: None, uses: 0, kl: na * (stride + 1) }
    });

    let mut stepper = Stepper { model, n, nodes, dif, alg, g, e_dd_inv, laps, fixed, held, newton };

    let mut u: Vec<Vec<f64>> = setup
        .initial
        .iter()
        .enumerate()
        .map(|(c, f)| {
            points.iter().enumerate().map(|(node, z)| if stepper.fixed[c][node] { 0.0 } else { f(z) }).collect()
        })
        .collect();
    stepper.solve_algebraic(&mut u, 0.0)?;

    let steps = ((config.t_end / config.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = config.t_end / steps as f64;
    let stride = config.snapshot_stride.max(1);

    let field0 = to_field(&grid, &u);
    let mut diags = vec![diagnostics(0.0, &field0, &model.e)?];
    let mut snapshot_times = vec![0.0];
    let mut snapshots = vec![field0];
    let mut status = SimStatus::Completed;

    let be = stepper.implicit_matrices(1.0, dt)?;
    let bdf2 = if steps > 1 { stepper.implicit_matrices(3.0, 2.0 * dt)? } else { Vec::new() };
    let nd = stepper.dif.len();

    let mut r_prev: Vec<Vec<f64>> = Vec::new();
    let mut u_prev: Vec<Vec<f64>> = Vec::new();
    let mut completed = 0;
    for step in 1..=steps {
        let t = step as f64 * dt;
        let r_now = stepper.explicit(&u);
        let mut next = u.clone();
        for k in 0..nd {
            let c = stepper.dif[k];
            let rhs = &mut next[c];
            if step == 1 {
                for node in 0..nodes {
                    rhs[node] = u[c][node] + dt * r_now[k][node];
                }
            } else {
                for node in 0..nodes {
                    rhs[node] =
                        4.0 * u[c][node] - u_prev[c][node] + 2.0 * dt * (2.0 * r_now[k][node] - r_prev[k][node]);
                }
            }
            for (node, &f) in stepper.fixed[c].iter().enumerate() {
                if f {
                    rhs[node] = 0.0;
                }
            }
            if step == 1 {
                be[k].solve(rhs);
            } else {
                bdf2[k].solve(rhs);
            }
        }
        stepper.solve_algebraic(&mut next, t)?;
        u_prev = std::mem::replace(&mut u, next);
        r_prev = r_now;
        completed = step;

        let blown = u.iter().flatten().any(|v| !v.is_finite() || v.abs() > config.divergence_bound);
        if blown {
            status = SimStatus::Diverged { t };
            let field = to_field(&grid, &u);
            if let Ok(d) = diagnostics(t, &field, &model.e) {
                diags.push(d);
            }
            snapshot_times.push(t);
            snapshots.push(field);
            break;
        }
        let field = to_field(&grid, &u);
        diags.push(diagnostics(t, &field, &model.e)?);
        if step % stride == 0 || step == steps {
            snapshot_times.push(t);
            snapshots.push(field);
        }
    }

    let steady_residual = stepper.steady_residual(&u);
    if status == SimStatus::Completed && steady_residual <= config.steady_tol {
        status = SimStatus::Converged;
    }
    Ok(SimResult {
        final_state: to_field(&grid, &u),
        grid,
        dt,
        steps: completed,
        snapshot_times,
        snapshots,
        diagnostics: diags,
        status,
        steady_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::AxisBc;
    use std::f64::consts::PI;

    fn heat_setup(nodes: Vec<usize>) -> (SemilinearModel, SimSetup) {
        let id = DMatrix::<f64>::identity(1, 1);
        let model = SemilinearModel::linear(id.clone(), id, DMatrix::zeros(1, 1));
        let setup = SimSetup {
            domain: BoxDomain::new(vec![PI, 1.0]).unwrap(),
            bc: vec![BoundarySpec::neumann(2)],
            nodes,
            initial: vec![Arc::new(|z: &[f64]| z[0].cos())],
        };
        (model, setup)
    }

    fn heat_error(nodes: Vec<usize>, dt: f64) -> f64 {
        let (model, setup) = heat_setup(nodes);
        let cfg = SimConfig { dt, t_end: 1.0, ..SimConfig::default() };
        let res = simulate(&model, &setup, &cfg).unwrap();
        let g = &res.grid;
        (0..g.len())
            .map(|node| (res.final_state.values[node] - (-1.0_f64).exp() * g.point(node)[0].cos()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn heat_equation_matches_exact_decay() {
        let err = heat_error(vec![64, 16], 0.01);
        assert!(err < 1e-3, "error {err}");
        let coarse = heat_error(vec![17, 5], 0.04);
        let fine = heat_error(vec![33, 5], 0.02);
        assert!(coarse / fine > 3.5, "ratio {}", coarse / fine);
    }

    #[test]
    fn diagnostics_cover_every_step() {
        let (model, setup) = heat_setup(vec![9, 5]);
        let cfg = SimConfig { dt: 0.1, t_end: 1.0, snapshot_stride: 3, ..SimConfig::default() };
        let res = simulate(&model, &setup, &cfg).unwrap();
        assert_eq!(res.steps, 10);
        assert_eq!(res.diagnostics.len(), 11);
        assert_eq!(res.snapshot_times.len(), 5);
        // mean of cos z1 is zero and Neumann conserves it
        assert!(res.diagnostics.iter().all(|d| d.mass[0].abs() < 1e-12));
    }

    #[test]
    fn nonpositive_step_is_rejected() {
        let (model, setup) = heat_setup(vec![9, 5]);
        let cfg = SimConfig { dt: 0.0, ..SimConfig::default() };
        assert!(matches!(simulate(&model, &setup, &cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn growth_is_flagged_as_divergence() {
        let id = DMatrix::<f64>::identity(1, 1);
        let model = SemilinearModel::linear(id.clone(), id, DMatrix::from_element(1, 1, 5.0));
        let (_, setup) = heat_setup(vec![9, 5]);
        let cfg = SimConfig { dt: 0.01, t_end: 10.0, ..SimConfig::default() };
        let res = simulate(&model, &setup, &cfg).unwrap();
        assert!(matches!(res.status, SimStatus::Diverged { .. }));
    }

    #[test]
    fn newton_solves_algebraic_rows() {
        // x2 solves Δx2 − 2x2 + 0.5x1 = 0 each step
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let a = DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, 0.5, -2.0]);
        let model = SemilinearModel::linear(e, DMatrix::identity(2, 2), a);
        let setup = SimSetup {
            domain: BoxDomain::new(vec![PI]).unwrap(),
            bc: vec![BoundarySpec::neumann(1)],
            nodes: vec![41],
            initial: vec![Arc::new(|z: &[f64]| 1.0 + z[0].cos()), Arc::new(|_: &[f64]| 0.0)],
        };
        let cfg = SimConfig { dt: 0.05, t_end: 1.0, ..SimConfig::default() };
        let res = simulate(&model, &setup, &cfg).unwrap();
        let (lap, _) = laplacian(&res.grid, &BoundarySpec::neumann(1)).unwrap();
        let x = &res.final_state;
        let x1 = x.component(0);
        let x2 = x.component(1);
        let mut l2 = vec![0.0; x2.len()];
        lap.mul_vec(&x2, &mut l2);
        for i in 0..x2.len() {
            assert!((l2[i] - 2.0 * x2[i] + 0.5 * x1[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn dirichlet_and_robin_rows() {
        let grid = Grid::uniform(&[1.0], &[5]).unwrap();
        let (lap, fixed) = laplacian(&grid, &BoundarySpec::dirichlet(1)).unwrap();
        assert_eq!(fixed, vec![true, false, false, false, true]);
        assert_eq!(lap.get(0, 0), 0.0);
        let robin = BoundarySpec::new(vec![AxisBc::robin(1.0, 1.0)]).unwrap();
        let (lap, fixed) = laplacian(&grid, &robin).unwrap();
        assert!(fixed.iter().all(|f| !f));
        let h = 0.25;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((lap.get(0, 0) - (-2.0 / (h * h) - 2.0 * (s / s) / h)).abs() < 1e-12);
        assert!((lap.get(0, 1) - 2.0 / (h * h)).abs() < 1e-12);
    }
}
