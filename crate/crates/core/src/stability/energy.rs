//! Gradient energy, deviation from the spatial mean and Poincaré checks.

use nalgebra::DMatrix;

use crate::eigenbasis::{grad_field, Basis, BcKind, GridField, ZERO_MODE_TOL};
use crate::error::{Error, Result};

/// `½ ∫ Σ_i (∂x/∂z_i)ᵀ E (∂x/∂z_i) dz` by finite differences and the trapezoid rule.
pub fn energy_integral(field: &GridField, e: &DMatrix<f64>) -> Result<f64> {
    let n = field.ncomp;
    if e.nrows() != n || e.ncols() != n {
        return Err(Error::Dimension {
            name: "energy weight E".into(),
            expected: format!("{n}x{n}"),
            actual: format!("{}x{}", e.nrows(), e.ncols()),
        });
    }
    let grads = grad_field(field)?;
    let w = field.grid.trapezoid_weights();
    let mut total = 0.0;
    for g in &grads {
        for (node, &wn) in w.iter().enumerate() {
            let v = &g.values[node * n..(node + 1) * n];
            let mut q = 0.0;
            for i in 0..n {
                for k in 0..n {
                    q += v[i] * e[(i, k)] * v[k];
                }
            }
            total += wn * q;
        }
    }
    Ok(0.5 * total)
}

/// `∫ ‖x − x_M‖ dz` with `x_M` the spatial mean.
pub fn deviation_from_average(field: &GridField) -> f64 {
    let n = field.ncomp;
    let vol: f64 = field.grid.trapezoid_weights().iter().sum();
    let mean: Vec<f64> = field.integrate().iter().map(|v| v / vol).collect();
    let w = field.grid.trapezoid_weights();
    w.iter()
        .enumerate()
        .map(|(node, &wn)| {
            let s: f64 = (0..n).map(|c| (field.get(node, c) - mean[c]).powi(2)).sum();
            wn * s.sqrt()
        })
        .sum()
}

/// Least-squares slope of `ln y` against `t` over the samples with `y > floor`.
pub fn fit_log_rate(times: &[f64], values: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(_, &v)| v > floor).map(|(&t, &v)| (t, v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub deviation: Vec<f64>,
    /// Slope of `ln E_L`; absent when the energy vanishes.
    pub energy_rate: Option<f64>,
    pub deviation_rate: Option<f64>,
}

/// Energy floor below which samples are left out of the rate fit.
pub const ENERGY_FLOOR: f64 = 1e-12;

pub fn energy_series(times: &[f64], fields: &[GridField], e: &DMatrix<f64>) -> Result<EnergySeries> {
    if fields.len() < 2 || times.len() != fields.len() {
        return Err(Error::InvalidInput(format!(
            "energy series needs at least two snapshots with matching times (got {} fields, {} times)",
            fields.len(),
            times.len()
        )));
    }
    let energy = fields.iter().map(|f| energy_integral(f, e)).collect::<Result<Vec<_>>>()?;
    let deviation: Vec<f64> = fields.iter().map(deviation_from_average).collect();
    Ok(EnergySeries {
        energy_rate: fit_log_rate(times, &energy, ENERGY_FLOOR),
        deviation_rate: fit_log_rate(times, &deviation, ENERGY_FLOOR),
        times: times.to_vec(),
        energy,
        deviation,
    })
}

/// `‖∇x‖² − μ₁‖x − x̄‖²` (or `‖∇x‖² − μ₁‖x‖²` for Dirichlet) and, for
/// Neumann, `‖Δx‖² − μ₁‖∇x‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareResiduals {
    pub gradient: f64,
    pub laplacian: Option<f64>,
}

fn grid_sq_norm(fields: &[GridField]) -> f64 {
    fields
        .iter()
        .map(|f| {
            let sq =
                GridField { grid: f.grid.clone(), ncomp: f.ncomp, values: f.values.iter().map(|v| v * v).collect() };
            sq.integrate().iter().sum::<f64>()
        })
        .sum()
}

/// Poincaré residuals from nodal data, with derivatives by finite differences.
pub fn poincare_check(field: &GridField, mu1: f64, kind: BcKind) -> Result<PoincareResiduals> {
    let grads = grad_field(field)?;
    let grad_sq = grid_sq_norm(&grads);
    match kind {
        BcKind::Neumann => {
            let vol: f64 = field.grid.trapezoid_weights().iter().sum();
            let mean: Vec<f64> = field.integrate().iter().map(|v| v / vol).collect();
            let centered = GridField {
                grid: field.grid.clone(),
                ncomp: field.ncomp,
                values: field.values.iter().enumerate().map(|(i, v)| v - mean[i % field.ncomp]).collect(),
            };
            let mut lap = GridField::zeros(field.grid.clone(), field.ncomp);
            for (a, g) in grads.iter().enumerate() {
                let second = grad_field(g)?;
                for (l, s) in lap.values.iter_mut().zip(&second[a].values) {
                    *l += s;
                }
            }
            Ok(PoincareResiduals {
                gradient: grad_sq - mu1 * grid_sq_norm(&[centered]),
                laplacian: Some(grid_sq_norm(&[lap]) - mu1 * grad_sq),
            })
        }
        BcKind::Dirichlet => Ok(PoincareResiduals {
            gradient: grad_sq - mu1 * grid_sq_norm(std::slice::from_ref(field)),
            laplacian: None,
        }),
        BcKind::Robin => {
            Err(Error::UnsupportedBoundary("Poincare check covers Neumann and Dirichlet boundaries only".into()))
        }
    }
}

/// Poincaré residuals of the scalar field `Σ c_j φ_j`, with exact mode
/// gradients and `Δφ_j = −μ_j φ_j`, integrated by the basis quadrature.
pub fn poincare_check_spectral(basis: &Basis, coeffs: &[f64], mu1: f64) -> Result<PoincareResiduals> {
    if coeffs.len() > basis.len() {
        return Err(Error::Dimension {
            name: "coefficients".into(),
            expected: format!("at most {}", basis.len()),
            actual: coeffs.len().to_string(),
        });
    }
    let kind = basis.bc.kind();
    if kind == BcKind::Robin {
        return Err(Error::UnsupportedBoundary("Poincare check covers Neumann and Dirichlet boundaries only".into()));
    }
    let modes = &basis.modes[..coeffs.len()];
    let vol = basis.domain.volume();
    let mean = modes.iter().zip(coeffs).map(|(m, c)| c * m.integral(&basis.domain)).sum::<f64>() / vol;
    let (mut val_sq, mut grad_sq, mut lap_sq) = (0.0, 0.0, 0.0);
    basis.quadrature.for_each(|_, z, w| {
        let mut x = 0.0;
        let mut lap = 0.0;
        let mut grad = vec![0.0; z.len()];
        for (m, &c) in modes.iter().zip(coeffs) {
            let v = m.value(z);
            x += c * v;
            lap -= c * m.mu * v;
            for (g, d) in grad.iter_mut().zip(m.gradient(z)) {
                *g += c * d;
            }
        }
        let centered = if kind == BcKind::Neumann { x - mean } else { x };
        val_sq += w * centered * centered;
        grad_sq += w * grad.iter().map(|g| g * g).sum::<f64>();
        lap_sq += w * lap * lap;
    });
    Ok(PoincareResiduals {
        gradient: grad_sq - mu1 * val_sq,
        laplacian: (kind == BcKind::Neumann).then_some(lap_sq - mu1 * grad_sq),
    })
}

/// `Σ (μ_j − μ₁) c_j²` over the non-constant modes.
pub fn spectral_gradient_gap(basis: &Basis, coeffs: &[f64], mu1: f64) -> f64 {
    basis.modes.iter().zip(coeffs).filter(|(m, _)| m.mu > ZERO_MODE_TOL).map(|(m, c)| (m.mu - mu1) * c * c).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::{tensor_modes, BoundarySpec, BoxDomain, Grid};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::uniform(&[PI, 1.0], &[129, 33]).unwrap()
    }

    #[test]
    fn constant_fields_have_no_energy() {
        let f = GridField::from_fn(grid(), 2, |_, v| {
            v[0] = 1.0;
            v[1] = -3.0;
        });
        let e = DMatrix::identity(2, 2);
        assert!(energy_integral(&f, &e).unwrap().abs() < 1e-20);
        let dev = deviation_from_average(&f);
        assert!(dev < 1e-10, "{dev}");
    }

    #[test]
    fn separable_decay_rate() {
        let e = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let times: Vec<f64> = (0..6).map(|k| k as f64 * 0.2).collect();
        let fields: Vec<GridField> = times
            .iter()
            .map(|&t| {
                GridField::from_fn(grid(), 2, |z, v| {
                    let s = (-2.0 * t).exp() * z[0].cos();
                    v[0] = s;
                    v[1] = -0.5 * s;
                })
            })
            .collect();
        let s = energy_series(&times, &fields, &e).unwrap();
        assert!((s.energy_rate.unwrap() + 4.0).abs() < 1e-3);
        assert!((s.deviation_rate.unwrap() + 2.0).abs() < 1e-3);
        // ½·wᵀEw·∫sin²z1 over the box, with w = (1, −1/2)
        let exact = 0.5 * (2.0 - 0.5 + 0.25) * PI / 2.0;
        assert!((s.energy[0] - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn zero_energy_skips_the_fit() {
        let f = GridField::zeros(grid(), 1);
        let s = energy_series(&[0.0, 1.0], &[f.clone(), f], &DMatrix::identity(1, 1)).unwrap();
        assert!(s.energy_rate.is_none());
    }

    #[test]
    fn spectral_poincare_saturates_on_first_mode() {
        let b = tensor_modes(&BoxDomain::new(vec![PI, 1.0]).unwrap(), &BoundarySpec::neumann(2), 6).unwrap();
        let r = poincare_check_spectral(&b, &[0.0, 1.0], 1.0).unwrap();
        assert!(r.gradient.abs() < 1e-8 && r.laplacian.unwrap().abs() < 1e-8);
        let r = poincare_check_spectral(&b, &[2.0], 1.0).unwrap();
        assert!(r.gradient.abs() < 1e-8 && r.laplacian.unwrap().abs() < 1e-8);
        let coeffs = [0.3, 0.5, -0.2, 0.1, 0.4];
        let r = poincare_check_spectral(&b, &coeffs, 1.0).unwrap();
        assert!((r.gradient - spectral_gradient_gap(&b, &coeffs, 1.0)).abs() < 1e-8);
    }

    #[test]
    fn grid_poincare_on_cosine() {
        let f = GridField::from_fn(grid(), 1, |z, v| v[0] = z[0].cos());
        let r = poincare_check(&f, 1.0, BcKind::Neumann).unwrap();
        assert!(r.gradient.abs() < 1e-3 && r.laplacian.unwrap().abs() < 1e-2);
        assert!(poincare_check(&f, 1.0, BcKind::Robin).is_err());
        let d = GridField::from_fn(Grid::uniform(&[1.0], &[201]).unwrap(), 1, |z, v| v[0] = (PI * z[0]).sin());
        let r = poincare_check(&d, PI * PI, BcKind::Dirichlet).unwrap();
        assert!(r.gradient.abs() < 1e-3 && r.laplacian.is_none());
    }
}
