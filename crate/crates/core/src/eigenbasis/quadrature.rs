//! Gauss–Legendre rules and their tensor products over boxes.

use std::f64::consts::PI;

/// One-dimensional Gauss–Legendre rule on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule on `[-1, 1]`; nodes ascending.
    pub fn reference(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like starting guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn on_interval(a: f64, b: f64, n: usize) -> Self {
        let r = Self::reference(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: r.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: r.weights.iter().map(|&w| half * w).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = if n == 0 { 0.0 } else { n as f64 * (x * p1 - p0) / (x * x - 1.0) };
    (p, dp)
}

/// Tensor-product Gauss rule over a box `prod_i (0, L_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRule {
    pub axes: Vec<GaussRule>,
}

impl TensorRule {
    pub fn on_box(lengths: &[f64], nodes_per_axis: usize) -> Self {
        Self { axes: lengths.iter().map(|&l| GaussRule::on_interval(0.0, l, nodes_per_axis)).collect() }
    }

    pub fn nodes_per_axis(&self) -> Vec<usize> {
        self.axes.iter().map(|r| r.nodes.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|r| r.nodes.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visits every tensor node in row-major order (last axis fastest) with
    /// the per-axis node indices, the point and the weight.
    pub fn for_each(&self, mut visit: impl FnMut(&[usize], &[f64], f64)) {
        let d = self.axes.len();
        let dims = self.nodes_per_axis();
        if dims.contains(&0) {
            return;
        }
        let mut idx = vec![0usize; d];
        let mut point = vec![0.0; d];
        loop {
            let mut w = 1.0;
            for a in 0..d {
                point[a] = self.axes[a].nodes[idx[a]];
                w *= self.axes[a].weights[idx[a]];
            }
            visit(&idx, &point, w);
            let mut a = d;
            loop {
                if a == 0 {
                    return;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_each(|_, z, w| acc += w * f(z));
        acc
    }
}
