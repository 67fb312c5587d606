//! Modal reduction `E Ẋ_j = (A − μ_j D) X_j + B U_j` of a linear PDAE and
//! closed-form solution of every mode.

pub mod expm;
pub mod signal;

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use expm::matrix_exponential;
pub use signal::{Signal, SignalTerm};

use crate::eigenbasis::{project, reconstruct, Basis, BoundarySpec, BoxDomain, FieldFn, Grid, GridField};
use crate::error::{Error, Result};
use crate::linalg::{min_symmetric_eigenvalue, require_square, singular_values};
use crate::pencil::{is_regular, weierstrass, MatrixPencil, WeierstrassForm};

/// Largest accepted mismatch between a supplied initial state and its
/// consistent projection, relative to `max(1, ‖X0‖)`.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// How the input enters the modes.
#[derive(Debug, Clone)]
pub enum ModalInput {
    /// Spatially uniform `u(t)`; mode `j` sees `u(t) · ∫φ_j`.
    Uniform(Signal),
    /// Per-mode coefficient signals `U_j(t)`, one per retained mode.
    PerMode(Vec<Signal>),
}

#[derive(Clone)]
pub struct PdaeProblem {
    pub e: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub domain: BoxDomain,
    /// One spec shared by all components, or one per component.
    pub bc: Vec<BoundarySpec>,
    /// Initial profile of every component; algebraic ones are corrected.
    pub initial: Vec<FieldFn>,
    pub input: ModalInput,
    pub disturbance: Option<Signal>,
}

impl std::fmt::Debug for PdaeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PdaeProblem")
            .field("e", &self.e)
            .field("d", &self.d)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("c", &self.c)
            .field("domain", &self.domain)
            .field("bc", &self.bc)
            .field("initial", &format_args!("[{} fields]", self.initial.len()))
            .field("input", &self.input)
            .field("disturbance", &self.disturbance)
            .finish()
    }
}

impl PdaeProblem {
    pub fn n(&self) -> usize {
        self.e.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        require_square("E", &self.e, n)?;
        require_square("D", &self.d, n)?;
        require_square("A", &self.a, n)?;
        if self.b.nrows() != n {
            return Err(Error::Dimension {
                name: "B".into(),
                expected: format!("{n} rows"),
                actual: format!("{} rows", self.b.nrows()),
            });
        }
        if self.c.ncols() != n {
            return Err(Error::Dimension {
                name: "C".into(),
                expected: format!("{n} columns"),
                actual: format!("{} columns", self.c.ncols()),
            });
        }
        if self.d.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidInput("D must be nonzero".into()));
        }
        let lo = min_symmetric_eigenvalue(&self.d);
        if lo < -1e-12 {
            return Err(Error::InvalidInput(format!("D must be positive semidefinite (eigenvalue {lo:e})")));
        }
        if self.initial.len() != n {
            return Err(Error::Dimension {
                name: "initial fields".into(),
                expected: n.to_string(),
                actual: self.initial.len().to_string(),
            });
        }
        if self.bc.len() != 1 && self.bc.len() != n {
            return Err(Error::Dimension {
                name: "boundary specs".into(),
                expected: format!("1 or {n}"),
                actual: self.bc.len().to_string(),
            });
        }
        if let ModalInput::Uniform(u) = &self.input {
            if u.dim != self.b.ncols() {
                return Err(Error::Dimension {
                    name: "input signal".into(),
                    expected: self.b.ncols().to_string(),
                    actual: u.dim.to_string(),
                });
            }
        }
        if let Some(v) = &self.disturbance {
            if v.dim != self.c.nrows() {
                return Err(Error::Dimension {
                    name: "disturbance signal".into(),
                    expected: self.c.nrows().to_string(),
                    actual: v.dim.to_string(),
                });
            }
        }
        Ok(())
    }

    /// The boundary spec shared by every component; mixed specs cannot use one basis.
    pub fn shared_bc(&self) -> Result<&BoundarySpec> {
        let first = &self.bc[0];
        if self.bc.iter().any(|b| b != first) {
            return Err(Error::InvalidInput(
                "modal reduction needs the same boundary conditions on every component".into(),
            ));
        }
        Ok(first)
    }

    /// True when `E` or `D` is singular, the structurally interesting case.
    pub fn has_singular_coefficient(&self) -> bool {
        let singular = |m: &DMatrix<f64>| {
            let s = singular_values(m);
            let hi = s.first().copied().unwrap_or(0.0);
            s.last().is_none_or(|&lo| lo <= 1e-12 * hi.max(1.0))
        };
        singular(&self.e) || singular(&self.d)
    }
}

/// One retained mode `j` (1-based) with its canonical form.
#[derive(Debug, Clone)]
pub struct ModalSystem {
    pub j: usize,
    pub mu: f64,
    pub pencil: MatrixPencil,
    pub weierstrass: WeierstrassForm,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// `C ∫φ_j`.
    pub c_j: DMatrix<f64>,
    pub input: Signal,
}

impl ModalSystem {
    /// Canonical form of the pencil `(E, A_j)`; fails with the 1-based mode
    /// number when the pencil is singular.
    pub fn from_matrices(
        j: usize,
        mu: f64,
        e: DMatrix<f64>,
        a_j: DMatrix<f64>,
        b: DMatrix<f64>,
        c_j: DMatrix<f64>,
        input: Signal,
    ) -> Result<Self> {
        let pencil = MatrixPencil::new(e, a_j)?;
        let (regular, c) = is_regular(&pencil);
        if !regular {
            return Err(Error::IrregularMode { mode: j });
        }
        let w = weierstrass(&pencil, c)?;
        let (b1, b2) = w.input_blocks(&b);
        Ok(Self { j, mu, pencil, weierstrass: w, b1, b2, b, c_j, input })
    }
}

#[derive(Debug, Clone)]
pub struct ModalFamily {
    pub systems: Vec<ModalSystem>,
    pub nus: Vec<usize>,
    pub uniform_index: bool,
    pub diagnostics: Vec<String>,
}

pub fn assemble_modal_family(problem: &PdaeProblem, basis: &Basis, count: usize) -> Result<ModalFamily> {
    problem.validate()?;
    let bc = problem.shared_bc()?;
    if bc != &basis.bc || problem.domain != basis.domain {
        return Err(Error::InvalidInput("basis was built for a different domain or boundary".into()));
    }
    if count == 0 || count > basis.len() {
        return Err(Error::InvalidInput(format!(
            "mode count {count} must be between 1 and the basis size {}",
            basis.len()
        )));
    }
    if let ModalInput::PerMode(u) = &problem.input {
        if u.len() < count || u.iter().any(|s| s.dim != problem.b.ncols()) {
            return Err(Error::Dimension {
                name: "per-mode inputs".into(),
                expected: format!("{count} signals of dimension {}", problem.b.ncols()),
                actual: format!("{} signals", u.len()),
            });
        }
    }
    let built: Vec<Result<ModalSystem>> = (0..count)
        .into_par_iter()
        .map(|idx| {
            let mode = &basis.modes[idx];
            let integral = mode.integral(&basis.domain);
            let input = match &problem.input {
                ModalInput::Uniform(u) => u.scaled(integral),
                ModalInput::PerMode(u) => u[idx].clone(),
            };
            ModalSystem::from_matrices(
                idx + 1,
                mode.mu,
                problem.e.clone(),
                &problem.a - &problem.d * mode.mu,
                problem.b.clone(),
                &problem.c * integral,
                input,
            )
        })
        .collect();
    let systems = built.into_iter().collect::<Result<Vec<_>>>()?;
    let nus: Vec<usize> = systems.iter().map(|s| s.weierstrass.nu).collect();
    let uniform_index = nus.windows(2).all(|w| w[0] == w[1]);
    let mut diagnostics = Vec::new();
    if !uniform_index {
        diagnostics.push(format!("nilpotency index varies across modes: {nus:?}"));
    }
    if !problem.has_singular_coefficient() {
        diagnostics.push("neither E nor D is singular".into());
    }
    Ok(ModalFamily { systems, nus, uniform_index, diagnostics })
}

/// `ξ₂(t) = −Σ_{i<ν} J^i B2 U^{(i)}(t)` in canonical coordinates.
fn forced_fast(system: &ModalSystem, derivatives: &[Signal], t: f64) -> DVector<f64> {
    let w = &system.weierstrass;
    let nf = w.n() - w.r;
    let mut out = DVector::zeros(nf);
    let mut jp = DMatrix::<f64>::identity(nf, nf);
    for du in derivatives.iter().take(w.nu) {
        out -= &jp * (&system.b2 * du.value(t));
        jp = &jp * &w.j;
    }
    out
}

fn input_derivatives(input: &Signal, nu: usize) -> Vec<Signal> {
    let mut out = Vec::with_capacity(nu);
    let mut s = input.clone();
    for _ in 0..nu {
        let next = s.derivative();
        out.push(s);
        s = next;
    }
    out
}

/// Replaces the fast canonical component of `raw` by the value the
/// constraints force at `t = 0`; returns the state and `‖raw − X0‖`.
pub fn consistent_initial_condition(
    system: &ModalSystem,
    raw: &DVector<f64>,
    input: &Signal,
) -> Result<(DVector<f64>, f64)> {
    let w = &system.weierstrass;
    if raw.len() != w.n() {
        return Err(Error::Dimension {
            name: "initial modal state".into(),
            expected: w.n().to_string(),
            actual: raw.len().to_string(),
        });
    }
    let mut xi = &w.m_inv * raw;
    let fast = forced_fast(system, &input_derivatives(input, w.nu), 0.0);
    xi.rows_mut(w.r, w.n() - w.r).copy_from(&fast);
    let x0 = &w.m * xi;
    let residual = (raw - &x0).norm();
    Ok((x0, residual))
}

#[derive(Debug, Clone)]
pub struct ModalTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub consistency_residual: f64,
}

/// Companion dynamics generating every input term exactly.
struct InputCompanion {
    /// Block generator of the companion states.
    generator: DMatrix<f64>,
    /// Maps companion states to `H · u(t)` contributions.
    coupling: DMatrix<f64>,
    terms: Vec<(num_complex::Complex64, u32, usize)>,
}

impl InputCompanion {
    fn new(input: &Signal, h: &DMatrix<f64>) -> Self {
        let size: usize = input.terms.iter().map(|t| 2 * (t.power as usize + 1)).sum();
        let r = h.nrows();
        let mut generator = DMatrix::zeros(size, size);
        let mut coupling = DMatrix::zeros(r, size);
        let mut terms = Vec::with_capacity(input.terms.len());
        let mut offset = 0;
        for term in &input.terms {
            let (a, om) = (term.rate.re, term.rate.im);
            let k = term.power as usize;
            for mm in 0..=k {
                let p = offset + 2 * mm;
                generator[(p, p)] = a;
                generator[(p, p + 1)] = -om;
                generator[(p + 1, p)] = om;
                generator[(p + 1, p + 1)] = a;
                if mm > 0 {
                    generator[(p, p - 2)] = 1.0;
                    generator[(p + 1, p - 1)] = 1.0;
                }
            }
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            let hv = h * &term.vector;
            let last = offset + 2 * k;
            for i in 0..r {
                coupling[(i, last)] += hv[i] * fact * term.coef.re;
                coupling[(i, last + 1)] -= hv[i] * fact * term.coef.im;
            }
            terms.push((term.rate, term.power, offset));
            offset += 2 * (k + 1);
        }
        Self { generator, coupling, terms }
    }

    fn size(&self) -> usize {
        self.generator.nrows()
    }

    /// Companion state at `t`: `t^m/m! · e^{λt}` split into real and imaginary parts.
    fn state(&self, t: f64) -> DVector<f64> {
        let mut w = DVector::zeros(self.size());
        for &(rate, power, offset) in &self.terms {
            let e = (rate * t).exp();
            let mut tm = 1.0;
            for mm in 0..=power as usize {
                if mm > 0 {
                    tm *= t / mm as f64;
                }
                w[offset + 2 * mm] = tm * e.re;
                w[offset + 2 * mm + 1] = tm * e.im;
            }
        }
        w
    }
}

/// Closed-form trajectory at the requested (ascending, non-negative) times.
pub fn solve_mode(system: &ModalSystem, x0: &DVector<f64>, input: &Signal, times: &[f64]) -> Result<ModalTrajectory> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::TimeGrid);
    }
    let w = &system.weierstrass;
    let n = w.n();
    let r = w.r;
    let derivs = input_derivatives(input, w.nu);
    let xi0 = &w.m_inv * x0;
    let fast0 = forced_fast(system, &derivs, 0.0);
    let mismatch = (w.m.columns(r, n - r) * (xi0.rows(r, n - r) - &fast0)).norm();
    if mismatch > CONSISTENCY_TOL * x0.norm().max(1.0) {
        return Err(Error::InconsistentInitial(mismatch));
    }

    let g = w.slow_generator()?;
    let h = crate::linalg::solve(&w.e1, &system.b1, "E1")?;
    let companion = InputCompanion::new(input, &h);
    let q = companion.size();
    let mut aug = DMatrix::zeros(r + q, r + q);
    aug.view_mut((0, 0), (r, r)).copy_from(&g);
    aug.view_mut((0, r), (r, q)).copy_from(&companion.coupling);
    aug.view_mut((r, r), (q, q)).copy_from(&companion.generator);

    let mut cache: HashMap<u64, DMatrix<f64>> = HashMap::new();
    let mut slow = xi0.rows(0, r).into_owned();
    let mut t_prev = 0.0;
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let dt = t - t_prev;
        if dt > 0.0 {
            let phi = match cache.entry(dt.to_bits()) {
                Entry::Occupied(e) => &*e.into_mut(),
                Entry::Vacant(e) => &*e.insert(matrix_exponential(&aug, dt)?),
            };
            let mut z = DVector::zeros(r + q);
            z.rows_mut(0, r).copy_from(&slow);
            z.rows_mut(r, q).copy_from(&companion.state(t_prev));
            slow = (phi * z).rows(0, r).into_owned();
        }
        let mut xi = DVector::zeros(n);
        xi.rows_mut(0, r).copy_from(&slow);
        xi.rows_mut(r, n - r).copy_from(&forced_fast(system, &derivs, t));
        states.push(&w.m * xi);
        t_prev = t;
    }
    Ok(ModalTrajectory { times: times.to_vec(), states, consistency_residual: mismatch })
}

/// `E Ẋ − (A − μD) X − B U(t)` for a caller-supplied `Ẋ`.
pub fn modal_residual(system: &ModalSystem, x: &DVector<f64>, xdot: &DVector<f64>, t: f64) -> DVector<f64> {
    &system.pencil.e * xdot - &system.pencil.a * x - &system.b * system.input.value(t)
}

/// Field `Σ_j X_j(t) φ_j(z)` at each time, accumulated in ascending `j`.
pub fn field_response(basis: &Basis, trajectories: &[ModalTrajectory], grid: &Grid) -> Result<Vec<GridField>> {
    let Some(first) = trajectories.first() else {
        return Ok(Vec::new());
    };
    if trajectories.iter().any(|t| t.times != first.times) {
        return Err(Error::TimeGrid);
    }
    (0..first.times.len())
        .map(|k| {
            let coeffs: Vec<DVector<f64>> = trajectories.iter().map(|t| t.states[k].clone()).collect();
            reconstruct(&coeffs, basis, grid)
        })
        .collect()
}

/// `y(t_k) = Σ_j C_j X_j(t_k) + v(t_k)`.
pub fn output_response(
    family: &ModalFamily,
    trajectories: &[ModalTrajectory],
    disturbance: Option<&Signal>,
    times: &[f64],
) -> Result<Vec<DVector<f64>>> {
    let ny = family.systems.first().map_or(0, |s| s.c_j.nrows());
    if trajectories.iter().any(|t| t.times != times) {
        return Err(Error::TimeGrid);
    }
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut y = DVector::zeros(ny);
            for (s, tr) in family.systems.iter().zip(trajectories) {
                y += &s.c_j * &tr.states[k];
            }
            if let Some(v) = disturbance {
                y += v.value(t);
            }
            y
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct ModalSolution {
    pub family: ModalFamily,
    pub raw_initial: Vec<DVector<f64>>,
    pub initial: Vec<DVector<f64>>,
    pub consistency_residuals: Vec<f64>,
    pub trajectories: Vec<ModalTrajectory>,
}

/// Projects the initial fields, corrects them and solves every retained mode.
pub fn solve_problem(problem: &PdaeProblem, basis: &Basis, count: usize, times: &[f64]) -> Result<ModalSolution> {
    let family = assemble_modal_family(problem, basis, count)?;
    let raw = project(&problem.initial, problem.n(), basis)?;
    let solved: Vec<Result<(DVector<f64>, f64, ModalTrajectory)>> = family
        .systems
        .par_iter()
        .zip(raw.par_iter())
        .map(|(s, x_raw)| {
            let (x0, res) = consistent_initial_condition(s, x_raw, &s.input)?;
            let tr = solve_mode(s, &x0, &s.input, times)?;
            Ok((x0, res, tr))
        })
        .collect();
    let mut initial = Vec::with_capacity(count);
    let mut consistency_residuals = Vec::with_capacity(count);
    let mut trajectories = Vec::with_capacity(count);
    for item in solved {
        let (x0, res, tr) = item?;
        initial.push(x0);
        consistency_residuals.push(res);
        trajectories.push(tr);
    }
    Ok(ModalSolution {
        family,
        raw_initial: raw.into_iter().take(count).collect(),
        initial,
        consistency_residuals,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::tensor_modes;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn single_system(e: DMatrix<f64>, a: DMatrix<f64>, b: DMatrix<f64>, input: Signal) -> ModalSystem {
        let pencil = MatrixPencil::new(e, a).unwrap();
        let w = weierstrass(&pencil, is_regular(&pencil).1).unwrap();
        let (b1, b2) = w.input_blocks(&b);
        ModalSystem { j: 1, mu: 0.0, pencil, weierstrass: w, b1, b2, b, c_j: DMatrix::zeros(0, 2), input }
    }

    fn ramp() -> Signal {
        Signal::new(1, vec![SignalTerm::cos(1, 0.0, 0.0, DVector::from_vec(vec![1.0]))])
    }

    #[test]
    fn scalar_decay() {
        let s = single_system(
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, -2.0),
            DMatrix::zeros(1, 1),
            Signal::zero(1),
        );
        let x0 = DVector::from_vec(vec![1.0]);
        let tr = solve_mode(&s, &x0, &Signal::zero(1), &[0.0, 1.0]).unwrap();
        assert!((tr.states[1][0] - 0.1353352832366127).abs() < 1e-12);
    }

    #[test]
    fn algebraic_row_is_projected() {
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let s = single_system(e, -DMatrix::identity(2, 2), DMatrix::zeros(2, 1), Signal::zero(1));
        let raw = DVector::from_vec(vec![1.0, 7.0]);
        let (x0, res) = consistent_initial_condition(&s, &raw, &Signal::zero(1)).unwrap();
        assert!((x0[0] - 1.0).abs() < 1e-12 && x0[1].abs() < 1e-12);
        assert!((res - 7.0).abs() < 1e-12);
        let fine = DVector::from_vec(vec![0.4, 0.0]);
        let (same, zero) = consistent_initial_condition(&s, &fine, &Signal::zero(1)).unwrap();
        assert!(zero < 1e-14 && (same - fine).norm() < 1e-14);
        assert!(matches!(solve_mode(&s, &raw, &Signal::zero(1), &[1.0]), Err(Error::InconsistentInitial(_))));
    }

    #[test]
    fn algebraic_row_follows_input() {
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let u = Signal::new(1, vec![SignalTerm::constant(DVector::from_vec(vec![1.0]))]);
        let s = single_system(e, -DMatrix::identity(2, 2), b, u.clone());
        let (x0, _) = consistent_initial_condition(&s, &DVector::from_vec(vec![2.0, 0.0]), &u).unwrap();
        let tr = solve_mode(&s, &x0, &u, &[0.0, 0.5, 3.0]).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.states) {
            assert!((x[0] - 2.0 * (-t).exp()).abs() < 1e-12);
            assert!((x[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn index_two_with_ramp_input() {
        // rows read x2' = x1 and 0 = x2 + u, so x2 = -t and x1 = -1
        let e = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let s = single_system(e, DMatrix::identity(2, 2), b, ramp());
        assert_eq!(s.weierstrass.nu, 2);
        let (x0, res) = consistent_initial_condition(&s, &DVector::zeros(2), &ramp()).unwrap();
        assert!((x0[0] + 1.0).abs() < 1e-12 && x0[1].abs() < 1e-12);
        assert!((res - 1.0).abs() < 1e-12);
        let tr = solve_mode(&s, &x0, &ramp(), &[0.0, 0.7, 2.0]).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.states) {
            assert!((x[0] + 1.0).abs() < 1e-12);
            assert!((x[1] + t).abs() < 1e-12);
        }
    }

    #[test]
    fn unsorted_times_are_rejected() {
        let s = single_system(DMatrix::identity(1, 1), -DMatrix::identity(1, 1), DMatrix::zeros(1, 1), Signal::zero(1));
        let x0 = DVector::from_vec(vec![1.0]);
        assert!(matches!(solve_mode(&s, &x0, &Signal::zero(1), &[1.0, 0.5]), Err(Error::TimeGrid)));
    }

    fn heat_problem(initial: Vec<FieldFn>, n: usize) -> PdaeProblem {
        PdaeProblem {
            e: DMatrix::identity(n, n),
            d: DMatrix::identity(n, n),
            a: DMatrix::zeros(n, n),
            b: DMatrix::zeros(n, 1),
            c: DMatrix::from_element(1, n, 1.0),
            domain: BoxDomain::new(vec![PI, 1.0]).unwrap(),
            bc: vec![BoundarySpec::neumann(2)],
            initial,
            input: ModalInput::Uniform(Signal::zero(1)),
            disturbance: None,
        }
    }

    #[test]
    fn heat_modes_decay_at_their_eigenvalues() {
        let basis = tensor_modes(&BoxDomain::new(vec![PI, 1.0]).unwrap(), &BoundarySpec::neumann(2), 6).unwrap();
        let phi2 = basis.modes[1].clone();
        let p = heat_problem(vec![Arc::new(move |z| phi2.value(z))], 1);
        let times = [0.0, 0.25, 1.0];
        let sol = solve_problem(&p, &basis, 3, &times).unwrap();
        for (s, mu) in sol.family.systems.iter().zip([0.0, 1.0, 4.0]) {
            assert!((s.weierstrass.finite_spectrum[0].re + mu).abs() < 1e-10);
        }
        let grid = Grid::uniform(&[PI, 1.0], &[9, 5]).unwrap();
        let fields = field_response(&basis, &sol.trajectories, &grid).unwrap();
        for (k, &t) in times.iter().enumerate() {
            for node in 0..grid.len() {
                let z = grid.point(node);
                let exact = (-t).exp() * basis.modes[1].value(&z);
                assert!((fields[k].get(node, 0) - exact).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn output_sees_only_the_constant_mode() {
        let basis = tensor_modes(&BoxDomain::new(vec![PI, 1.0]).unwrap(), &BoundarySpec::neumann(2), 4).unwrap();
        let p = heat_problem(
            vec![Arc::new(|z: &[f64]| 1.0 + z[0].cos()), Arc::new(|_: &[f64]| 2.0), Arc::new(|z: &[f64]| z[0].cos())],
            3,
        );
        let sol = solve_problem(&p, &basis, 4, &[0.0, 1.0]).unwrap();
        let c1 = &sol.family.systems[0].c_j;
        assert!((c1[(0, 0)] - PI.sqrt()).abs() < 1e-13);
        for s in &sol.family.systems[1..] {
            assert!(s.c_j.norm() < 1e-13);
        }
        let y = output_response(&sol.family, &sol.trajectories, None, &[0.0, 1.0]).unwrap();
        // total mass ∫(x1+x2+x3) = 3π is conserved under Neumann diffusion
        assert!((y[1][0] - 3.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn irregular_mode_is_named() {
        // third row of A − μD vanishes at μ = 1 while E's third row is zero
        let mut p = heat_problem(vec![Arc::new(|_: &[f64]| 0.0), Arc::new(|_: &[f64]| 0.0)], 2);
        p.e = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        p.d = DMatrix::identity(2, 2);
        p.a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let basis = tensor_modes(&p.domain, &BoundarySpec::neumann(2), 3).unwrap();
        let err = assemble_modal_family(&p, &basis, 3).unwrap_err();
        assert_eq!(err.to_string(), "mode 2 pencil irregular");
    }

    #[test]
    fn mixed_boundary_specs_are_rejected() {
        let mut p = heat_problem(vec![Arc::new(|_: &[f64]| 0.0), Arc::new(|_: &[f64]| 0.0)], 2);
        p.bc = vec![BoundarySpec::neumann(2), BoundarySpec::dirichlet(2)];
        let basis = tensor_modes(&p.domain, &BoundarySpec::neumann(2), 3).unwrap();
        assert!(assemble_modal_family(&p, &basis, 3).is_err());
    }
}
