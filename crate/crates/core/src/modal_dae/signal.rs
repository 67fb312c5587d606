//! Vector signals built from terms `Re(c · t^k · e^{λt}) · v`.
//!
//! The class is closed under differentiation, so derivatives of any order are
//! exact.

use nalgebra::DVector;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct SignalTerm {
    pub coef: Complex64,
    pub power: u32,
    pub rate: Complex64,
    pub vector: DVector<f64>,
}

impl SignalTerm {
    /// `t^k e^{at} cos(ωt) · v`.
    pub fn cos(power: u32, a: f64, omega: f64, vector: DVector<f64>) -> Self {
        Self { coef: Complex64::new(1.0, 0.0), power, rate: Complex64::new(a, omega), vector }
    }

    /// `t^k e^{at} sin(ωt) · v`.
    pub fn sin(power: u32, a: f64, omega: f64, vector: DVector<f64>) -> Self {
        Self { coef: Complex64::new(0.0, -1.0), power, rate: Complex64::new(a, omega), vector }
    }

    /// Constant vector.
    pub fn constant(vector: DVector<f64>) -> Self {
        Self::cos(0, 0.0, 0.0, vector)
    }

    /// Scalar factor `Re(c t^k e^{λt})`.
    pub fn scalar(&self, t: f64) -> f64 {
        (self.coef * t.powi(self.power as i32) * (self.rate * t).exp()).re
    }

    fn derivative(&self) -> Vec<SignalTerm> {
        let mut out = Vec::with_capacity(2);
        if self.rate != Complex64::new(0.0, 0.0) {
            out.push(SignalTerm { coef: self.coef * self.rate, ..self.clone() });
        }
        if self.power > 0 {
            out.push(SignalTerm { coef: self.coef * self.power as f64, power: self.power - 1, ..self.clone() });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub dim: usize,
    pub terms: Vec<SignalTerm>,
}

impl Signal {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn new(dim: usize, terms: Vec<SignalTerm>) -> Self {
        assert!(terms.iter().all(|t| t.vector.len() == dim), "signal term vectors must have length {dim}");
        Self { dim, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self, t: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim);
        for term in &self.terms {
            v.axpy(term.scalar(t), &term.vector, 1.0);
        }
        v
    }

    pub fn derivative(&self) -> Signal {
        Signal { dim: self.dim, terms: self.terms.iter().flat_map(SignalTerm::derivative).collect() }
    }

    /// `u^{(order)}(t)`.
    pub fn derivative_value(&self, order: usize, t: f64) -> DVector<f64> {
        let mut s = self.clone();
        for _ in 0..order {
            s = s.derivative();
        }
        s.value(t)
    }

    /// Same scalar profiles with every vector mapped through `f`.
    pub fn map_vectors(&self, dim: usize, f: impl Fn(&DVector<f64>) -> DVector<f64>) -> Signal {
        Signal { dim, terms: self.terms.iter().map(|t| SignalTerm { vector: f(&t.vector), ..t.clone() }).collect() }
    }

    pub fn scaled(&self, factor: f64) -> Signal {
        self.map_vectors(self.dim, |v| v * factor)
    }

    pub fn add(&self, other: &Signal) -> Signal {
        assert_eq!(self.dim, other.dim);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Signal { dim: self.dim, terms }
    }
}
