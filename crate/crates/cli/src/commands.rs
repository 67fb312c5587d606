//! Command implementations shared by the binary and the tests.

use std::path::Path;

use nalgebra::DMatrix;
use pdae_core::eigenbasis::{poincare_constant, tensor_modes_with, Basis, Grid, GridField};
use pdae_core::modal_dae::{field_response, output_response, solve_problem, ModalInput, PdaeProblem};
use pdae_core::pencil::{verdict, MatrixPencil};
use pdae_core::sim::wetland::{classify_stability, wetland_model, WetlandParams};
use pdae_core::sim::{simulate, SemilinearModel, SimConfig, SimResult, SimSetup, SimStatus};
use pdae_core::stability::energy::ENERGY_FLOOR;
use pdae_core::stability::{delta_criterion, fit_log_rate, lmi_certificate, lmi_literal_lambda1, spectrum_report};

use crate::error::{CliError, Context};
use crate::model::{Dynamics, Model, SimSection};
use crate::output::{to_json, Csv, OutputSet};
use crate::summary::{
    DeltaSummary, LmiSummary, ModalRunSummary, ReferenceRow, RunSummary, SimulationSummary, SpectrumSummary,
    StatusLabel, VerdictSummary,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_DIVERGED: u8 = 2;

/// Reference `(h1, h2, ‖A_J‖, margin)` rows for the wetland linearization.
pub const REFERENCE_ROWS: [(f64, f64, f64, f64); 2] = [(0.1, 0.1, 1.0069, 1.9931), (24.0, 0.1, 3.2841, -0.7159)];

/// Command-line overrides of model settings.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub modes: Option<usize>,
    pub grid: Option<Vec<usize>>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, model: &mut Model) -> Result<(), CliError> {
        if let Some(n) = self.modes {
            if n == 0 {
                return Err(CliError::Model("--modes must be positive".into()));
            }
            model.modes = n;
        }
        if let Some(seed) = self.seed {
            model.seed = seed;
        }
        if self.grid.is_some() || self.dt.is_some() || self.t_end.is_some() {
            let sim = model.sim.get_or_insert_with(SimSection::default);
            if let Some(g) = &self.grid {
                if g.len() != model.domain.dim() {
                    return Err(CliError::Model(format!(
                        "--grid has {} entries, expected {}",
                        g.len(),
                        model.domain.dim()
                    )));
                }
                sim.grid = g.clone();
            }
            if let Some(dt) = self.dt {
                sim.dt = dt;
            }
            if let Some(t) = self.t_end {
                sim.t_end = t;
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct CommandResult {
    pub summary: RunSummary,
    pub exit_code: u8,
    pub files: Vec<std::path::PathBuf>,
}

fn basis_for(model: &Model) -> Result<Basis, CliError> {
    tensor_modes_with(&model.domain, &model.bc, model.modes, model.quadrature).context("eigenbasis")
}

fn reference_row(params: &WetlandParams, norm_a: f64, margin: f64, weighted: f64) -> Option<ReferenceRow> {
    let base = WetlandParams::reference(params.h1, params.h2);
    if *params != base {
        return None;
    }
    REFERENCE_ROWS.iter().find(|(h1, h2, _, _)| *h1 == params.h1 && *h2 == params.h2).map(|&(h1, h2, na, m)| {
        ReferenceRow {
            h1,
            h2,
            norm_a_reference: na,
            margin_reference: m,
            norm_a_error: norm_a - na,
            weighted_margin_error: weighted - m,
            margin_error: margin - m,
        }
    })
}

fn finish(mut summary: RunSummary, mut out: OutputSet, exit_code: u8) -> Result<CommandResult, CliError> {
    summary.files = out
        .written
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .chain(std::iter::once("summary.json".to_string()))
        .collect();
    out.write("summary.json", &to_json(&summary))?;
    Ok(CommandResult { summary, exit_code, files: out.written })
}

/// Spectrum, per-mode verdicts, certificates and the decay rate estimate.
pub fn analyze(model: &Model, out_dir: &Path) -> Result<CommandResult, CliError> {
    let basis = basis_for(model)?;
    let (e, d, a) = model.linear_part()?;
    let count = model.modes.min(basis.len());
    let mut summary = RunSummary::new("analyze", model.seed, model.n(), count);

    let mut irregular = Vec::new();
    for (idx, mode) in basis.modes[..count].iter().enumerate() {
        let a_j = &a - &d * mode.mu;
        let pencil = MatrixPencil::new(e.clone(), a_j.clone()).context("pencil")?;
        let v = verdict(&pencil).context("pencil")?;
        let lmi = if v.regular { lmi_certificate(&e, &a_j, 0.0).ok().map(|c| c.feasible) } else { None };
        if !v.regular {
            irregular.push(idx + 1);
        }
        summary.verdicts.push(VerdictSummary::new(idx + 1, mode.mu, &v, lmi));
    }
    summary.admissible = Some(summary.verdicts.iter().all(|v| v.admissible));

    let spectrum = spectrum_report(&d, &a, &basis, count).context("stability")?;
    summary.spectrum = Some(SpectrumSummary::from(&spectrum));

    let lambda1 = lmi_literal_lambda1(&d, &basis, count);
    match lmi_certificate(&e, &a, lambda1) {
        Ok(c) => summary.lmi = Some(LmiSummary::new(lambda1, &c)),
        Err(err) => summary.diagnostics.push(format!("lmi: {err}")),
    }

    match poincare_constant(&basis) {
        Ok(mu1) => {
            let c = delta_criterion(&e, &d, &a, mu1);
            let reference = match &model.dynamics {
                Dynamics::Wetland(p) => reference_row(p, c.norm_a, c.margin(), c.dimension_weighted_margin()),
                Dynamics::Linear { .. } => None,
            };
            summary.delta = Some(DeltaSummary::new(&c, reference));
        }
        Err(err) => summary.diagnostics.push(format!("delta: {err}")),
    }

    let out = OutputSet::new(out_dir);
    let mut failure = None;
    for &j in &irregular {
        let msg = format!("mode {j} pencil irregular");
        if matches!(model.dynamics, Dynamics::Wetland(_)) {
            // x3 is prescribed on the kernel modes, where the pencil degenerates
            summary.diagnostics.push(format!("{msg} (algebraic kernel, x3 prescribed)"));
        } else {
            summary.diagnostics.push(msg);
            failure.get_or_insert(j);
        }
    }
    let result = finish(summary, out, EXIT_OK)?;
    if let Some(mode) = failure {
        return Err(CliError::Core { context: "modal_dae", source: pdae_core::Error::IrregularMode { mode } });
    }
    Ok(result)
}

fn sim_section(model: &Model) -> SimSection {
    model.sim.clone().unwrap_or_default()
}

fn node_header(dim: usize, n: usize, lead: &str) -> Vec<String> {
    let mut h = vec![lead.to_string()];
    h.extend((1..=dim).map(|i| format!("z{i}")));
    h.extend((1..=n).map(|i| format!("x{i}")));
    h
}

fn field_rows(csv: &mut Csv, t: f64, field: &GridField) {
    let mut row = Vec::with_capacity(1 + field.grid.dim() + field.ncomp);
    for node in 0..field.grid.len() {
        row.clear();
        row.push(t);
        row.extend(field.grid.point(node));
        row.extend((0..field.ncomp).map(|c| field.get(node, c)));
        csv.row(&row);
    }
}

/// Closed-form modal solution sampled on the snapshot times.
pub fn solve_linear(model: &Model, out_dir: &Path) -> Result<CommandResult, CliError> {
    let Dynamics::Linear { e, d, a, b, c } = &model.dynamics else {
        return Err(CliError::Model("solve-linear needs a [matrices] model".into()));
    };
    let sim = sim_section(model);
    let basis = basis_for(model)?;
    let count = model.modes.min(basis.len());
    let step = sim.dt * sim.snapshot_stride as f64;
    if !(step > 0.0) || !(sim.t_end > 0.0) {
        return Err(CliError::Model("sim.dt and sim.t_end must be positive".into()));
    }
    let samples = (sim.t_end / step + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=samples).map(|k| k as f64 * step).collect();

    let problem = PdaeProblem {
        e: e.clone(),
        d: d.clone(),
        a: a.clone(),
        b: b.clone(),
        c: c.clone(),
        domain: model.domain.clone(),
        bc: vec![model.bc.clone()],
        initial: model.initial.clone(),
        input: ModalInput::Uniform(model.input.clone()),
        disturbance: None,
    };
    let sol = solve_problem(&problem, &basis, count, &times).context("modal_dae")?;
    let n = model.n();
    let dim = model.domain.dim();

    let mut modes = Csv::new(&{
        let mut h = vec!["t".to_string(), "j".to_string()];
        h.extend((1..=n).map(|i| format!("X{i}")));
        h
    });
    for (k, &t) in times.iter().enumerate() {
        for (j, tr) in sol.trajectories.iter().enumerate() {
            let mut row = vec![t, (j + 1) as f64];
            row.extend(tr.states[k].iter());
            modes.row(&row);
        }
    }

    let grid = Grid::uniform(model.domain.lengths(), &sim.grid).context("eigenbasis")?;
    let fields = field_response(&basis, &sol.trajectories, &grid).context("modal_dae")?;
    let mut field = Csv::new(&node_header(dim, n, "t"));
    for (f, &t) in fields.iter().zip(&times) {
        field_rows(&mut field, t, f);
    }

    let ys = output_response(&sol.family, &sol.trajectories, None, &times).context("modal_dae")?;
    let ny = c.nrows();
    let mut output = Csv::new(&{
        let mut h = vec!["t".to_string()];
        h.extend((1..=ny).map(|i| format!("y{i}")));
        h
    });
    for (y, &t) in ys.iter().zip(&times) {
        let mut row = vec![t];
        row.extend(y.iter());
        output.row(&row);
    }

    let mut out = OutputSet::new(out_dir);
    out.write("modes.csv", &modes.into_bytes())?;
    out.write("field.csv", &field.into_bytes())?;
    out.write("output.csv", &output.into_bytes())?;

    let mut summary = RunSummary::new("solve-linear", model.seed, n, count);
    summary.modal = Some(ModalRunSummary {
        samples: times.len(),
        nus: sol.family.nus.clone(),
        max_consistency_residual: sol.consistency_residuals.iter().copied().fold(0.0, f64::max),
        final_field_max: fields.last().map_or(0.0, GridField::max_abs),
    });
    summary.diagnostics = sol.family.diagnostics.clone();
    finish(summary, out, EXIT_OK)
}

fn sim_config(sim: &SimSection) -> SimConfig {
    SimConfig {
        dt: sim.dt,
        t_end: sim.t_end,
        snapshot_stride: sim.snapshot_stride,
        steady_tol: sim.steady_tol,
        ..SimConfig::default()
    }
}

fn exit_for(status: SimStatus) -> u8 {
    match status {
        SimStatus::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_OK,
    }
}

/// `max |x_i − x_i*|` over nodes for the two differential components.
pub fn distance_to_equilibrium(field: &GridField, eq: &[f64; 3]) -> f64 {
    (0..field.grid.len())
        .flat_map(|node| (0..2).map(move |c| (node, c)))
        .map(|(node, c)| (field.get(node, c) - eq[c]).abs())
        .fold(0.0, f64::max)
}

fn simulation_summary(res: &SimResult, eq: Option<&[f64; 3]>) -> SimulationSummary {
    let times: Vec<f64> = res.diagnostics.iter().map(|d| d.t).collect();
    let energy: Vec<f64> = res.diagnostics.iter().map(|d| d.energy).collect();
    let dev: Vec<f64> = res.diagnostics.iter().map(|d| d.deviation).collect();
    SimulationSummary {
        status: StatusLabel::from(res.status),
        t_final: times.last().copied().unwrap_or(0.0),
        steps: res.steps,
        dt: res.dt,
        final_state_max: res.final_state.max_abs(),
        steady_residual: res.steady_residual.is_finite().then_some(res.steady_residual),
        energy_rate: fit_log_rate(&times, &energy, ENERGY_FLOOR),
        deviation_rate: fit_log_rate(&times, &dev, ENERGY_FLOOR),
        distance_to_equilibrium: eq.map(|e| distance_to_equilibrium(&res.final_state, e)),
    }
}

fn diagnostics_csv(res: &SimResult, n: usize) -> Csv {
    let mut h = vec!["t".to_string(), "energy".to_string(), "spatial_avg_dev".to_string()];
    for c in 1..=n {
        h.push(format!("min_x{c}"));
        h.push(format!("max_x{c}"));
    }
    let mut csv = Csv::new(&h);
    for d in &res.diagnostics {
        let mut row = vec![d.t, d.energy, d.deviation];
        for c in 0..n {
            row.push(d.min[c]);
            row.push(d.max[c]);
        }
        csv.row(&row);
    }
    csv
}

fn build_sim_model(model: &Model, sim: &SimSection) -> Result<SemilinearModel, CliError> {
    Ok(match &model.dynamics {
        Dynamics::Linear { e, d, a, .. } => SemilinearModel::linear(e.clone(), d.clone(), a.clone()),
        Dynamics::Wetland(p) => {
            let basis = basis_for(model)?;
            wetland_model(*p, &basis, sim.x3_amplitude)
        }
    })
}

/// Finite-difference simulation; exit code 2 on divergence.
pub fn simulate_model(model: &Model, out_dir: &Path) -> Result<CommandResult, CliError> {
    let Some(sim) = model.sim.clone() else {
        return Err(CliError::Model("simulate needs a [sim] section".into()));
    };
    let sm = build_sim_model(model, &sim)?;
    let mut notes = Vec::new();
    if !model.input.is_zero() {
        notes.push("input terms are ignored by simulate; solve-linear includes them".to_string());
    }
    let setup = SimSetup {
        domain: model.domain.clone(),
        bc: vec![model.bc.clone()],
        nodes: sim.grid.clone(),
        initial: model.initial.clone(),
    };
    let res = simulate(&sm, &setup, &sim_config(&sim)).context("semilinear_sim")?;
    let n = model.n();
    let eq = match &model.dynamics {
        Dynamics::Wetland(p) => Some(p.equilibrium().context("semilinear_sim")?),
        Dynamics::Linear { .. } => None,
    };

    let mut field = Csv::new(&node_header(model.domain.dim(), n, "t"));
    for (f, &t) in res.snapshots.iter().zip(&res.snapshot_times) {
        field_rows(&mut field, t, f);
    }
    let mut out = OutputSet::new(out_dir);
    out.write("field.csv", &field.into_bytes())?;
    out.write("diagnostics.csv", &diagnostics_csv(&res, n).into_bytes())?;

    let mut summary = RunSummary::new("simulate", model.seed, n, model.modes);
    summary.simulation = Some(simulation_summary(&res, eq.as_ref()));
    summary.diagnostics = notes;
    if let SimStatus::Diverged { t } = res.status {
        summary.diagnostics.push(format!("state exceeded the divergence bound at t = {t}"));
    }
    finish(summary, out, exit_for(res.status))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WetlandCase {
    Stable,
    Unstable,
}

impl WetlandCase {
    pub fn params(self) -> WetlandParams {
        match self {
            Self::Stable => WetlandParams::stable_case(),
            Self::Unstable => WetlandParams::unstable_case(),
        }
    }

    pub fn amplitude(self) -> f64 {
        match self {
            Self::Stable => 0.0,
            Self::Unstable => 0.01,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Unstable => "unstable",
        }
    }
}

/// Linear interpolation of component `c` along the last axis at `z_last`,
/// for every node index of the first axis (2-D grids).
fn slice_last_axis(field: &GridField, c: usize, z_last: f64) -> Vec<(f64, f64)> {
    let g = &field.grid;
    let ax = &g.axes[g.dim() - 1];
    let k = ax.partition_point(|&z| z <= z_last).clamp(1, ax.len() - 1);
    let w = (z_last - ax[k - 1]) / (ax[k] - ax[k - 1]);
    let stride = ax.len();
    g.axes[0]
        .iter()
        .enumerate()
        .map(|(i, &z1)| {
            let lo = field.get(i * stride + k - 1, c);
            let hi = field.get(i * stride + k, c);
            (z1, lo + w * (hi - lo))
        })
        .collect()
}

/// Bilinear value of component `c` at `z` on a 2-D grid.
fn probe(field: &GridField, c: usize, z: [f64; 2]) -> f64 {
    let g = &field.grid;
    let locate = |ax: &[f64], v: f64| {
        let k = ax.partition_point(|&x| x <= v).clamp(1, ax.len() - 1);
        (k - 1, (v - ax[k - 1]) / (ax[k] - ax[k - 1]))
    };
    let (i, wx) = locate(&g.axes[0], z[0]);
    let (j, wy) = locate(&g.axes[1], z[1]);
    let s = g.axes[1].len();
    let v = |a: usize, b: usize| field.get(a * s + b, c);
    (1.0 - wx) * ((1.0 - wy) * v(i, j) + wy * v(i, j + 1)) + wx * ((1.0 - wy) * v(i + 1, j) + wy * v(i + 1, j + 1))
}

/// Reference-row comparison, simulation and plot-ready slices for one case.
pub fn wetland_demo(case: WetlandCase, overrides: &Overrides, out_dir: &Path) -> Result<CommandResult, CliError> {
    let params = case.params();
    let src = format!(
        "[wetland]\nh1 = {:?}\nh2 = {:?}\n\n[sim]\nsnapshot_stride = 10\nx3_amplitude = {:?}\n",
        params.h1,
        params.h2,
        case.amplitude()
    );
    let mut model = crate::model::parse_model_str(&src, "wetland-demo")?;
    overrides.apply(&mut model)?;
    if model.domain.dim() != 2 {
        return Err(CliError::Model("wetland demo runs on a 2-D domain".into()));
    }
    let sim = model.sim.clone().unwrap_or_default();
    let basis = basis_for(&model)?;
    let count = model.modes.min(basis.len());
    let class = classify_stability(params, &basis, count).context("stability")?;

    let mut summary = RunSummary::new(&format!("wetland-demo {}", case.label()), model.seed, 3, count);
    summary.spectrum = Some(SpectrumSummary::from(&class.spectrum));
    let reference = reference_row(&params, class.certificate.norm_a, class.margin, class.weighted_margin);
    summary.delta = Some(DeltaSummary::new(&class.certificate, reference.clone()));

    let mut table = Csv::new(
        &["case", "h1", "h2", "norm_a", "norm_a_reference", "margin", "weighted_margin", "margin_reference"]
            .map(String::from),
    );
    let (na_ref, m_ref) = reference.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.norm_a_reference, r.margin_reference));
    table.labeled_row(
        case.label(),
        &[params.h1, params.h2, class.certificate.norm_a, na_ref, class.margin, class.weighted_margin, m_ref],
    );

    let sm = wetland_model(params, &basis, sim.x3_amplitude);
    let setup = SimSetup {
        domain: model.domain.clone(),
        bc: vec![model.bc.clone()],
        nodes: sim.grid.clone(),
        initial: model.initial.clone(),
    };
    let res = simulate(&sm, &setup, &sim_config(&sim)).context("semilinear_sim")?;
    summary.simulation = Some(simulation_summary(&res, Some(&class.equilibrium)));

    let z2 = 0.5 * model.domain.lengths()[1];
    let mut slices = [Csv::new(&["t", "z1", "x1"].map(String::from)), Csv::new(&["t", "z1", "x2"].map(String::from))];
    for (f, &t) in res.snapshots.iter().zip(&res.snapshot_times) {
        for (c, csv) in slices.iter_mut().enumerate() {
            for (z1, v) in slice_last_axis(f, c, z2) {
                csv.row(&[t, z1, v]);
            }
        }
    }
    let at = [0.5 * model.domain.lengths()[0], z2];
    let mut phase = Csv::new(&["t", "x1", "x2"].map(String::from));
    for (f, &t) in res.snapshots.iter().zip(&res.snapshot_times) {
        phase.row(&[t, probe(f, 0, at), probe(f, 1, at)]);
    }

    let mut out = OutputSet::new(out_dir);
    out.write("table1.csv", &table.into_bytes())?;
    let [x1, x2] = slices;
    out.write("x1_tz.csv", &x1.into_bytes())?;
    out.write("x2_tz.csv", &x2.into_bytes())?;
    out.write("phase.csv", &phase.into_bytes())?;
    out.write("diagnostics.csv", &diagnostics_csv(&res, 3).into_bytes())?;
    finish(summary, out, exit_for(res.status))
}

/// `A_J` of the wetland linearization, exposed for reporting.
pub fn wetland_jacobian(case: WetlandCase) -> Result<DMatrix<f64>, CliError> {
    case.params().jacobian_at_equilibrium().context("semilinear_sim")
}
