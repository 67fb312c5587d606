//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Adaptive Dormand–Prince 5(4) from `t0` to each of `times` (ascending).
pub fn dopri<F>(f: F, y0: &DVector<f64>, t0: f64, times: &[f64], rtol: f64, atol: f64) -> Vec<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    let mut out = Vec::with_capacity(times.len());
    let mut t = t0;
    let mut y = y0.clone();
    let mut h: f64 = 1e-3;
    for &target in times {
        while t < target {
            let step = h.min(target - t);
            let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
            for s in 0..7 {
                let mut ys = y.clone();
                for (j, kj) in k.iter().enumerate() {
                    ys.axpy(step * A[s][j], kj, 1.0);
                }
                k.push(f(t + C[s] * step, &ys));
            }
            let mut y5 = y.clone();
            let mut y4 = y.clone();
            for s in 0..7 {
                y5.axpy(step * B5[s], &k[s], 1.0);
                y4.axpy(step * B4[s], &k[s], 1.0);
            }
            let err = (0..y.len())
                .map(|i| ((y5[i] - y4[i]) / (atol + rtol * y5[i].abs().max(y[i].abs()))).powi(2))
                .sum::<f64>()
                / y.len().max(1) as f64;
            let err = err.sqrt();
            if err <= 1.0 {
                t = if step == target - t { target } else { t + step };
                y = y5;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = step * factor;
        }
        out.push(y.clone());
    }
    out
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Well-conditioned random matrix `I + 0.3·R`.
pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) + random_matrix(rng, n, n) * 0.3
}

/// Index-1 system `E ẋ = A x + B u` with `E = P diag(I_r, 0) Q` and
/// `A = P [[A11, A12], [A21, A22]] Q`, `A22` invertible.
#[derive(Debug, Clone)]
pub struct SemiExplicit {
    pub e: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub p_inv: DMatrix<f64>,
    pub r: usize,
}

impl SemiExplicit {
    pub fn random(rng: &mut ChaCha8Rng, n: usize, r: usize, m: usize) -> Self {
        let p = random_invertible(rng, n);
        let q = random_invertible(rng, n);
        let mut core_e = DMatrix::zeros(n, n);
        for i in 0..r {
            core_e[(i, i)] = 1.0;
        }
        let mut core_a = random_matrix(rng, n, n);
        // shift the slow block left so solutions stay bounded
        for i in 0..r {
            core_a[(i, i)] -= 1.5;
        }
        for i in r..n {
            core_a[(i, i)] += if core_a[(i, i)] >= 0.0 { 2.0 } else { -2.0 };
        }
        let e = &p * core_e * &q;
        let a = &p * core_a * &q;
        let b = random_matrix(rng, n, m);
        let p_inv = p.try_inverse().unwrap();
        Self { e, a, b, q, p_inv, r }
    }

    /// Consistent `x0` whose slow coordinates are `y1`.
    pub fn consistent(&self, y1: &DVector<f64>, u0: &DVector<f64>) -> DVector<f64> {
        let y = self.algebraic_complete(y1, u0);
        self.q.clone().try_inverse().unwrap() * y
    }

    fn blocks(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        (&self.p_inv * &self.a * self.q.clone().try_inverse().unwrap(), &self.p_inv * &self.b)
    }

    fn algebraic_complete(&self, y1: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let n = self.e.nrows();
        let r = self.r;
        let (ca, cb) = self.blocks();
        let a21 = ca.view((r, 0), (n - r, r));
        let a22 = ca.view((r, r), (n - r, n - r)).into_owned();
        let rhs = -(a21 * y1 + cb.rows(r, n - r) * u);
        let y2 = a22.lu().solve(&rhs).unwrap();
        let mut y = DVector::zeros(n);
        y.rows_mut(0, r).copy_from(y1);
        y.rows_mut(r, n - r).copy_from(&y2);
        y
    }

    /// Reference trajectory by eliminating the algebraic block and
    /// integrating the slow ODE with `dopri`.
    pub fn reference<U>(&self, x0: &DVector<f64>, u: U, times: &[f64]) -> Vec<DVector<f64>>
    where
        U: Fn(f64) -> DVector<f64>,
    {
        let n = self.e.nrows();
        let r = self.r;
        let (ca, cb) = self.blocks();
        let y0 = &self.q * x0;
        let y10 = y0.rows(0, r).into_owned();
        let q_inv = self.q.clone().try_inverse().unwrap();
        let rhs = |t: f64, y1: &DVector<f64>| {
            let ut = u(t);
            let y = self.algebraic_complete(y1, &ut);
            (ca.rows(0, r) * y) + cb.rows(0, r) * ut
        };
        let sol = dopri(rhs, &y10, 0.0, times, 1e-12, 1e-13);
        sol.iter()
            .zip(times)
            .map(|(y1, &t)| &q_inv * self.algebraic_complete(y1, &u(t)))
            .inspect(|x| assert_eq!(x.len(), n))
            .collect()
    }
}

fn complex_det(m: &DMatrix<Complex64>) -> Complex64 {
    m.clone().lu().determinant()
}

/// Roots of `det(sE − A)` from its coefficients, recovered by sampling on a
/// circle and inverting the discrete Fourier transform.
pub fn det_interpolation_spectrum(e: &DMatrix<f64>, a: &DMatrix<f64>) -> Vec<Complex64> {
    let n = e.nrows();
    let k = n + 1;
    let radius = 1.0 + a.norm() / e.norm().max(1e-300);
    let samples: Vec<Complex64> = (0..k)
        .map(|j| {
            let s = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * j as f64 / k as f64);
            let m = e.map(|v| Complex64::new(v, 0.0)) * s - a.map(|v| Complex64::new(v, 0.0));
            complex_det(&m)
        })
        .collect();
    // c_p = (1/k) Σ_j p(s_j) ω^{-jp} / radius^p
    let coeffs: Vec<f64> = (0..k)
        .map(|p| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in samples.iter().enumerate() {
                acc += v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (j * p) as f64 / k as f64);
            }
            (acc / (k as f64 * radius.powi(p as i32))).re
        })
        .collect();
    let scale = coeffs.iter().enumerate().map(|(p, c)| c.abs() * radius.powi(p as i32)).fold(0.0, f64::max);
    let degree = (0..k).rev().find(|&p| coeffs[p].abs() * radius.powi(p as i32) > 1e-9 * scale).unwrap_or(0);
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    let mut comp = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        comp[(i, degree - 1)] = -coeffs[i] / lead;
    }
    comp.complex_eigenvalues().iter().copied().collect()
}

/// Greedy matching distance between two spectra of equal length.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spectra differ in size: {a:?} vs {b:?}");
    let mut pool = b.to_vec();
    let mut worst = 0.0_f64;
    for x in a {
        let (idx, d) =
            pool.iter().enumerate().map(|(i, y)| (i, (x - y).norm())).min_by(|p, q| p.1.total_cmp(&q.1)).unwrap();
        worst = worst.max(d);
        pool.swap_remove(idx);
    }
    worst
}
