//! Model files (TOML).

use std::ops::Range;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use pdae_core::eigenbasis::{AxisBc, BoundarySpec, BoxDomain, FaceBc, FieldFn, DEFAULT_QUADRATURE_NODES};
use pdae_core::modal_dae::signal::{Signal, SignalTerm};
use pdae_core::sim::wetland::{wetland_initial, WetlandParams};
use serde::Deserialize;
use toml::Spanned;

use crate::error::CliError;
use crate::expr::parse_expr;

pub const DEFAULT_MODES: usize = 16;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default)]
    pub seed: u64,
    pub matrices: Option<Matrices>,
    pub domain: Option<DomainSection>,
    pub bc: Option<Vec<FaceSection>>,
    #[serde(default)]
    pub modes: ModesSection,
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub input: Vec<InputTerm>,
    pub wetland: Option<WetlandSection>,
    pub sim: Option<SimSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matrices {
    #[serde(rename = "E")]
    pub e: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C")]
    pub c: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Length {
    Value(f64),
    Expr(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub lengths: Vec<Length>,
}

/// `p u + q ∂u/∂n = 0` on both faces of one axis.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceSection {
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    #[serde(rename = "N", default = "default_modes")]
    pub n: usize,
    #[serde(default = "default_quadrature")]
    pub quadrature: usize,
}

impl Default for ModesSection {
    fn default() -> Self {
        Self { n: DEFAULT_MODES, quadrature: DEFAULT_QUADRATURE_NODES }
    }
}

fn default_modes() -> usize {
    DEFAULT_MODES
}

fn default_quadrature() -> usize {
    DEFAULT_QUADRATURE_NODES
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x: Vec<Spanned<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Cos,
    Sin,
}

/// `t^power e^{decay·t} cos(ωt) · vector` (or `sin`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputTerm {
    pub kind: InputKind,
    #[serde(default)]
    pub power: u32,
    #[serde(default)]
    pub decay: f64,
    #[serde(default)]
    pub omega: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WetlandSection {
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    #[serde(rename = "N1")]
    pub n1: Option<f64>,
    #[serde(rename = "N2")]
    pub n2: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
}

impl WetlandSection {
    pub fn params(&self) -> WetlandParams {
        let base = WetlandParams::stable_case();
        WetlandParams {
            r1: self.r1.unwrap_or(base.r1),
            r2: self.r2.unwrap_or(base.r2),
            n1: self.n1.unwrap_or(base.n1),
            n2: self.n2.unwrap_or(base.n2),
            k1: self.k1.unwrap_or(base.k1),
            k2: self.k2.unwrap_or(base.k2),
            h1: self.h1.unwrap_or(base.h1),
            h2: self.h2.unwrap_or(base.h2),
            d1: self.d1.unwrap_or(base.d1),
            d2: self.d2.unwrap_or(base.d2),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_grid")]
    pub grid: Vec<usize>,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub x3_amplitude: f64,
    #[serde(default = "default_steady")]
    pub steady_tol: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_end: default_t_end(),
            grid: default_grid(),
            snapshot_stride: default_stride(),
            x3_amplitude: 0.0,
            steady_tol: default_steady(),
        }
    }
}

fn default_dt() -> f64 {
    0.01
}
fn default_t_end() -> f64 {
    100.0
}
fn default_grid() -> Vec<usize> {
    vec![64, 16]
}
fn default_stride() -> usize {
    100
}
fn default_steady() -> f64 {
    1e-6
}

/// Which dynamics a model describes.
#[derive(Debug, Clone)]
pub enum Dynamics {
    Linear { e: DMatrix<f64>, d: DMatrix<f64>, a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64> },
    Wetland(WetlandParams),
}

/// Validated model ready for the commands.
#[derive(Clone)]
pub struct Model {
    pub seed: u64,
    pub dynamics: Dynamics,
    pub domain: BoxDomain,
    pub bc: BoundarySpec,
    pub modes: usize,
    pub quadrature: usize,
    pub initial: Vec<FieldFn>,
    pub initial_src: Vec<String>,
    pub input: Signal,
    pub sim: Option<SimSection>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("seed", &self.seed)
            .field("dynamics", &self.dynamics)
            .field("domain", &self.domain)
            .field("bc", &self.bc)
            .field("modes", &self.modes)
            .field("initial", &self.initial_src)
            .field("sim", &self.sim)
            .finish_non_exhaustive()
    }
}

impl Model {
    pub fn n(&self) -> usize {
        match &self.dynamics {
            Dynamics::Linear { e, .. } => e.nrows(),
            Dynamics::Wetland(_) => 3,
        }
    }

    /// `(E, D, A)` of the linear model or of the wetland linearization.
    pub fn linear_part(&self) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>), CliError> {
        match &self.dynamics {
            Dynamics::Linear { e, d, a, .. } => Ok((e.clone(), d.clone(), a.clone())),
            Dynamics::Wetland(p) => Ok((p.e(), p.d(), p.jacobian_at_equilibrium()?)),
        }
    }
}

fn matrix(name: &str, rows: &[Vec<f64>], shape: Option<(usize, usize)>) -> Result<DMatrix<f64>, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(CliError::Model(format!("matrix {name} must be a non-empty rectangular array")));
    }
    if let Some((er, ec)) = shape {
        if (r, c) != (er, ec) {
            return Err(CliError::Model(format!("matrix {name} is {r}x{c}, expected {er}x{ec}")));
        }
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let mut end = offset.min(src.len());
    while !src.is_char_boundary(end) {
        end -= 1;
    }
    let before = &src[..end];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn span_start(span: Range<usize>, src: &str) -> usize {
    // the span covers the quoted string; skip the opening quote
    let s = span.start;
    if src[s..].starts_with("\"\"\"") || src[s..].starts_with("'''") {
        s + 3
    } else {
        s + 1
    }
}

/// Parses and validates a model document; `origin` names it in messages.
pub fn parse_model_str(src: &str, origin: &str) -> Result<Model, CliError> {
    let file: ModelFile =
        toml::from_str(src).map_err(|e| CliError::Parse(format!("{origin}: {}", e.to_string().trim_end())))?;

    let dynamics = match (&file.matrices, &file.wetland) {
        (Some(_), Some(_)) => {
            return Err(CliError::Model("give either [matrices] or [wetland], not both".into()));
        }
        (None, None) => return Err(CliError::Model("model needs a [matrices] or [wetland] section".into())),
        (Some(m), None) => {
            let e = matrix("E", &m.e, None)?;
            let n = e.nrows();
            if e.ncols() != n {
                return Err(CliError::Model(format!("matrix E is {}x{}, expected a square matrix", n, e.ncols())));
            }
            let d = matrix("D", &m.d, Some((n, n)))?;
            let a = matrix("A", &m.a, Some((n, n)))?;
            let b = match &m.b {
                Some(rows) => {
                    let b = matrix("B", rows, None)?;
                    if b.nrows() != n {
                        return Err(CliError::Model(format!("matrix B has {} rows, expected {n}", b.nrows())));
                    }
                    b
                }
                None => DMatrix::zeros(n, 1),
            };
            let c = match &m.c {
                Some(rows) => {
                    let c = matrix("C", rows, None)?;
                    if c.ncols() != n {
                        return Err(CliError::Model(format!("matrix C has {} columns, expected {n}", c.ncols())));
                    }
                    c
                }
                None => DMatrix::identity(n, n),
            };
            Dynamics::Linear { e, d, a, b, c }
        }
        (None, Some(w)) => Dynamics::Wetland(w.params()),
    };
    let n = match &dynamics {
        Dynamics::Linear { e, .. } => e.nrows(),
        Dynamics::Wetland(_) => 3,
    };

    let lengths: Vec<f64> = match &file.domain {
        Some(dom) => dom
            .lengths
            .iter()
            .enumerate()
            .map(|(i, l)| match l {
                Length::Value(v) => Ok(*v),
                Length::Expr(s) => parse_expr(s, 0)
                    .map(|e| e.eval(&[]))
                    .map_err(|e| CliError::Model(format!("domain.lengths[{i}]: {e}"))),
            })
            .collect::<Result<_, _>>()?,
        None if matches!(dynamics, Dynamics::Wetland(_)) => vec![std::f64::consts::PI, 1.0],
        None => return Err(CliError::Model("model needs a [domain] section".into())),
    };
    if lengths.is_empty() {
        return Err(CliError::Model("domain.lengths must not be empty".into()));
    }
    if let Some((i, l)) = lengths.iter().enumerate().find(|(_, l)| !(**l > 0.0 && l.is_finite())) {
        return Err(CliError::Model(format!("domain.lengths[{i}] = {l} must be positive")));
    }
    let dim = lengths.len();
    let domain = BoxDomain::new(lengths)?;

    let bc = match &file.bc {
        None => BoundarySpec::neumann(dim),
        Some(faces) => {
            if faces.len() != dim {
                return Err(CliError::Model(format!("bc has {} entries, expected one per axis ({dim})", faces.len())));
            }
            BoundarySpec::new(faces.iter().map(|f| AxisBc::both(FaceBc::new(f.p, f.q))).collect())?
        }
    };

    if file.modes.n == 0 {
        return Err(CliError::Model("modes.N must be positive".into()));
    }

    let (initial, initial_src) = match &file.initial {
        Some(sec) => {
            if sec.x.len() != n {
                return Err(CliError::Model(format!("initial.x has {} expressions, expected {n}", sec.x.len())));
            }
            let mut fields = Vec::with_capacity(n);
            let mut srcs = Vec::with_capacity(n);
            for (i, s) in sec.x.iter().enumerate() {
                let expr = parse_expr(s.get_ref(), dim).map_err(|e| {
                    let skip: usize = s.get_ref().chars().take(e.column - 1).map(char::len_utf8).sum();
                    let (line, col) = line_col(src, span_start(s.span(), src) + skip);
                    CliError::Parse(format!("{origin}: initial.x[{i}] at line {line}, column {col}: {}", e.message))
                })?;
                fields.push(expr.into_field());
                srcs.push(s.get_ref().clone());
            }
            (fields, srcs)
        }
        None => match &dynamics {
            Dynamics::Wetland(_) => (wetland_initial(), vec!["0.3".into(), "0.3*(1+cos(z1))".into(), "0".into()]),
            Dynamics::Linear { .. } => {
                return Err(CliError::Model("model needs an [initial] section".into()));
            }
        },
    };

    let m = match &dynamics {
        Dynamics::Linear { b, .. } => b.ncols(),
        Dynamics::Wetland(_) => 1,
    };
    let mut terms = Vec::with_capacity(file.input.len());
    for (i, t) in file.input.iter().enumerate() {
        if t.vector.len() != m {
            return Err(CliError::Model(format!("input[{i}].vector has length {}, expected {m}", t.vector.len())));
        }
        let v = DVector::from_vec(t.vector.clone());
        terms.push(match t.kind {
            InputKind::Cos => SignalTerm::cos(t.power, t.decay, t.omega, v),
            InputKind::Sin => SignalTerm::sin(t.power, t.decay, t.omega, v),
        });
    }

    if let Some(sim) = &file.sim {
        if sim.grid.len() != dim {
            return Err(CliError::Model(format!("sim.grid has {} entries, expected {dim}", sim.grid.len())));
        }
        if sim.snapshot_stride == 0 {
            return Err(CliError::Model("sim.snapshot_stride must be positive".into()));
        }
    }

    Ok(Model {
        seed: file.seed,
        dynamics,
        domain,
        bc,
        modes: file.modes.n,
        quadrature: file.modes.quadrature,
        initial,
        initial_src,
        input: Signal::new(m, terms),
        sim: file.sim,
    })
}

pub fn parse_model(path: &Path) -> Result<Model, CliError> {
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_model_str(&src, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAT: &str = r#"
[matrices]
E = [[1.0]]
D = [[1.0]]
A = [[0.0]]

[domain]
lengths = [1.0]

[[bc]]
p = 1.0
q = 0.0

[initial]
x = ["sin(pi*z1)"]
"#;

    #[test]
    fn minimal_heat_model() {
        let m = parse_model_str(HEAT, "heat").unwrap();
        assert_eq!(m.modes, 16);
        assert_eq!(m.n(), 1);
        assert!((m.initial[0](&[0.5]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_shapes_and_keys_are_named() {
        let bad = HEAT.replace("E = [[1.0]]", "E = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]");
        let err = parse_model_str(&bad, "m").unwrap_err().to_string();
        assert!(err.contains("E"), "{err}");
        let bad = HEAT.replace("[domain]", "[domain]\nwidth = 3");
        let err = parse_model_str(&bad, "m").unwrap_err().to_string();
        assert!(err.contains("width"), "{err}");
        let bad = HEAT.replace("lengths = [1.0]", "lengths = [-1.0]");
        assert!(parse_model_str(&bad, "m").unwrap_err().to_string().contains("positive"));
    }

    #[test]
    fn expression_errors_point_into_the_file() {
        let bad = HEAT.replace("sin(pi*z1)", "sin(pi*z2)");
        let err = parse_model_str(&bad, "m").unwrap_err().to_string();
        assert!(err.contains("line 15, column 14"), "{err}");
    }
}
