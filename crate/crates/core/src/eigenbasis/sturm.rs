//! One-dimensional Sturm–Liouville problems `-ψ'' = k² ψ` on `(0, L)` with
//! homogeneous Robin conditions `p ψ + q ∂ψ/∂n = 0` at each end.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Robin coefficients on one face. Dirichlet when `q == 0`, Neumann when `p == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceBc {
    pub p: f64,
    pub q: f64,
}

impl FaceBc {
    pub const DIRICHLET: FaceBc = FaceBc { p: 1.0, q: 0.0 };
    pub const NEUMANN: FaceBc = FaceBc { p: 0.0, q: 1.0 };

    pub fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }

    pub fn kind(&self) -> BcKind {
        if self.q == 0.0 {
            BcKind::Dirichlet
        } else if self.p == 0.0 {
            BcKind::Neumann
        } else {
            BcKind::Robin
        }
    }

    /// Scales to unit length with `p, q ≥ 0`. Opposite signs admit negative
    /// eigenvalues and are rejected.
    pub fn normalized(&self) -> Result<FaceBc> {
        let (p, q) = (self.p, self.q);
        if !(p.is_finite() && q.is_finite()) || (p == 0.0 && q == 0.0) {
            return Err(Error::UnsupportedBoundary(format!(
                "face coefficients (p, q) = ({p}, {q}) must be finite and not both zero"
            )));
        }
        if p * q < 0.0 {
            return Err(Error::UnsupportedBoundary(format!(
                "Robin coefficients (p, q) = ({p}, {q}) of opposite sign give negative eigenvalues"
            )));
        }
        let s = p.hypot(q);
        Ok(FaceBc { p: p.abs() / s, q: q.abs() / s })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Robin,
}

/// Conditions at the low (`z = 0`) and high (`z = L`) faces of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBc {
    pub low: FaceBc,
    pub high: FaceBc,
}

impl AxisBc {
    pub fn both(face: FaceBc) -> Self {
        Self { low: face, high: face }
    }

    pub fn dirichlet() -> Self {
        Self::both(FaceBc::DIRICHLET)
    }

    pub fn neumann() -> Self {
        Self::both(FaceBc::NEUMANN)
    }

    pub fn robin(p: f64, q: f64) -> Self {
        Self::both(FaceBc::new(p, q))
    }
}

/// Unit-norm eigenfunction `ψ(z) = a cos(kz) + b sin(kz)` of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMode {
    pub k: f64,
    pub cos_coef: f64,
    pub sin_coef: f64,
    /// Factor applied to the unnormalized profile `q₀k cos kz + p₀ sin kz`
    /// (or to the constant 1 for `k = 0`).
    pub norm_constant: f64,
}

impl AxisMode {
    pub fn eigenvalue(&self) -> f64 {
        self.k * self.k
    }

    pub fn value(&self, z: f64) -> f64 {
        let (s, c) = (self.k * z).sin_cos();
        self.cos_coef * c + self.sin_coef * s
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let (s, c) = (self.k * z).sin_cos();
        self.k * (self.sin_coef * c - self.cos_coef * s)
    }

    /// Exact integral over `(0, L)`.
    pub fn integral(&self, length: f64) -> f64 {
        if self.k == 0.0 {
            return self.cos_coef * length;
        }
        let (s, c) = (self.k * length).sin_cos();
        (self.cos_coef * s + self.sin_coef * (1.0 - c)) / self.k
    }
}

/// Normalized characteristic function of an axis; its positive zeros are the wavenumbers.
pub fn characteristic(length: f64, bc: &AxisBc, k: f64) -> Result<f64> {
    let lo = bc.low.normalized()?;
    let hi = bc.high.normalized()?;
    Ok(char_fn(length, lo, hi, k))
}

fn char_fn(length: f64, lo: FaceBc, hi: FaceBc, k: f64) -> f64 {
    let (s, c) = (k * length).sin_cos();
    let f = (hi.p * lo.q + hi.q * lo.p) * k * c + (hi.p * lo.p - hi.q * lo.q * k * k) * s;
    f / (1.0 + k * k)
}

/// The first `count` eigenpairs of the axis problem, ascending in `k`.
pub fn sl_modes_1d(length: f64, bc: &AxisBc, count: usize) -> Result<Vec<AxisMode>> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidInput(format!("axis length {length} must be positive")));
    }
    if count == 0 {
        return Err(Error::InvalidInput("mode count must be at least 1".into()));
    }
    let lo = bc.low.normalized()?;
    let hi = bc.high.normalized()?;
    let l = length;
    let amp = (2.0 / l).sqrt();
    let modes = match (lo.kind(), hi.kind()) {
        (BcKind::Dirichlet, BcKind::Dirichlet) => (1..=count).map(|n| closed(n as f64 * PI / l, 0.0, amp)).collect(),
        (BcKind::Neumann, BcKind::Neumann) => (0..count)
            .map(|n| if n == 0 { closed(0.0, 1.0 / l.sqrt(), 0.0) } else { closed(n as f64 * PI / l, amp, 0.0) })
            .collect(),
        (BcKind::Dirichlet, BcKind::Neumann) => {
            (0..count).map(|n| closed((n as f64 + 0.5) * PI / l, 0.0, amp)).collect()
        }
        (BcKind::Neumann, BcKind::Dirichlet) => {
            (0..count).map(|n| closed((n as f64 + 0.5) * PI / l, amp, 0.0)).collect()
        }
        _ => robin_roots(l, lo, hi, count)?.into_iter().map(|k| robin_mode(l, lo, k)).collect(),
    };
    Ok(modes)
}

fn closed(k: f64, cos_coef: f64, sin_coef: f64) -> AxisMode {
    AxisMode { k, cos_coef, sin_coef, norm_constant: cos_coef.abs().max(sin_coef.abs()) }
}

fn robin_mode(l: f64, lo: FaceBc, k: f64) -> AxisMode {
    let a = lo.q * k;
    let b = lo.p;
    let (s2, c2) = (2.0 * k * l).sin_cos();
    let sq = 0.5 * (a * a + b * b) * l + (a * a - b * b) * s2 / (4.0 * k) + a * b * (1.0 - c2) / (2.0 * k);
    let nc = 1.0 / sq.sqrt();
    AxisMode { k, cos_coef: nc * a, sin_coef: nc * b, norm_constant: nc }
}

/// Scan in steps of π/(2L) for sign changes, then bisect each bracket.
fn robin_roots(l: f64, lo: FaceBc, hi: FaceBc, count: usize) -> Result<Vec<f64>> {
    let step = PI / (2.0 * l);
    let f = |k: f64| char_fn(l, lo, hi, k);
    let max_steps = 4 * count + 64;
    let mut roots = Vec::with_capacity(count);
    let mut a = step * 1e-9;
    let mut fa = f(a);
    for i in 1..=max_steps {
        let b = step * i as f64;
        let fb = f(b);
        if fb == 0.0 {
            roots.push(b);
        } else if fa != 0.0 && fa.signum() != fb.signum() {
            roots.push(bisect(&f, a, b, fa));
        }
        if roots.len() >= count {
            roots.truncate(count);
            return Ok(roots);
        }
        a = b;
        fa = fb;
    }
    Err(Error::BracketExhausted { lo: a - step, hi: a, found: roots.len(), wanted: count })
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 1e-12 || m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::quadrature::GaussRule;

    fn roots(modes: &[AxisMode]) -> Vec<f64> {
        modes.iter().map(|m| m.k).collect()
    }

    #[test]
    fn neumann_on_pi_includes_constant() {
        let m = sl_modes_1d(PI, &AxisBc::neumann(), 3).unwrap();
        let k = roots(&m);
        for (got, want) in k.iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_unit_interval() {
        let m = sl_modes_1d(1.0, &AxisBc::dirichlet(), 2).unwrap();
        assert!((m[0].k - PI).abs() < 1e-12);
        assert!((m[1].k - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn robin_root_has_small_residual_and_sign_change() {
        let bc = AxisBc::robin(1.0, 1.0);
        let m = sl_modes_1d(1.0, &bc, 1).unwrap();
        let k = m[0].k;
        assert!(characteristic(1.0, &bc, k).unwrap().abs() < 1e-10);
        let left = characteristic(1.0, &bc, k - 1e-6).unwrap();
        let right = characteristic(1.0, &bc, k + 1e-6).unwrap();
        assert!(left * right < 0.0);
        // Robin root sits between the Neumann and Dirichlet first roots
        assert!(k > 0.0 && k < PI);
    }

    #[test]
    fn robin_modes_satisfy_boundary_conditions_and_normalize() {
        let bc = AxisBc { low: FaceBc::new(2.0, 0.5), high: FaceBc::new(0.3, 1.0) };
        let l = 1.7;
        let modes = sl_modes_1d(l, &bc, 6).unwrap();
        let rule = GaussRule::on_interval(0.0, l, 64);
        for m in &modes {
            // outward normal is -z at the low face
            let r0 = 2.0 * m.value(0.0) - 0.5 * m.derivative(0.0);
            let r1 = 0.3 * m.value(l) + 1.0 * m.derivative(l);
            assert!(r0.abs() < 1e-9, "low face residual {r0}");
            assert!(r1.abs() < 1e-9, "high face residual {r1}");
            let nrm = rule.integrate(|z| m.value(z).powi(2));
            assert!((nrm - 1.0).abs() < 1e-10);
        }
        assert!(modes.windows(2).all(|w| w[0].k < w[1].k));
    }

    #[test]
    fn mixed_closed_forms() {
        let dn = sl_modes_1d(2.0, &AxisBc { low: FaceBc::DIRICHLET, high: FaceBc::NEUMANN }, 2).unwrap();
        assert!((dn[0].k - PI / 4.0).abs() < 1e-12);
        assert!(dn[0].derivative(2.0).abs() < 1e-12);
        let nd = sl_modes_1d(2.0, &AxisBc { low: FaceBc::NEUMANN, high: FaceBc::DIRICHLET }, 2).unwrap();
        assert!(nd[1].value(2.0).abs() < 1e-12);
    }

    #[test]
    fn opposite_sign_robin_is_rejected() {
        let err = sl_modes_1d(1.0, &AxisBc::robin(1.0, -1.0), 1).unwrap_err();
        assert!(matches!(err, Error::UnsupportedBoundary(_)));
        assert!(sl_modes_1d(1.0, &AxisBc::robin(0.0, 0.0), 1).is_err());
    }

    #[test]
    fn exact_integrals() {
        let m = sl_modes_1d(PI, &AxisBc::neumann(), 3).unwrap();
        assert!((m[0].integral(PI) - PI.sqrt()).abs() < 1e-14);
        assert!(m[1].integral(PI).abs() < 1e-14);
    }
}
