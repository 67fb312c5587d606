//! Tensor grids and nodal fields.

use crate::error::{Error, Result};

/// Tensor grid; node ordering is row-major (axis 0 slowest, last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub axes: Vec<Vec<f64>>,
}

impl Grid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one axis".into()));
        }
        for (a, ax) in axes.iter().enumerate() {
            if ax.is_empty() || ax.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidInput(format!("grid axis {a} must be non-empty and strictly increasing")));
            }
        }
        Ok(Self { axes })
    }

    /// Uniform vertex grid including both faces.
    pub fn uniform(lengths: &[f64], nodes: &[usize]) -> Result<Self> {
        if lengths.len() != nodes.len() {
            return Err(Error::Dimension {
                name: "grid".into(),
                expected: format!("{} axes", lengths.len()),
                actual: format!("{} node counts", nodes.len()),
            });
        }
        let axes = lengths
            .iter()
            .zip(nodes)
            .map(|(&l, &n)| {
                if n < 2 {
                    return Err(Error::InvalidInput(format!("uniform grid needs at least 2 nodes per axis, got {n}")));
                }
                Ok((0..n).map(|i| l * i as f64 / (n - 1) as f64).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> Vec<usize> {
        let shape = self.shape();
        let mut s = vec![1; shape.len()];
        for a in (0..shape.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * shape[a + 1];
        }
        s
    }

    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            idx[a] = node % shape[a];
            node /= shape[a];
        }
        idx
    }

    pub fn point(&self, node: usize) -> Vec<f64> {
        self.multi_index(node).iter().zip(&self.axes).map(|(&i, ax)| ax[i]).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|n| self.point(n)).collect()
    }

    /// Tensor trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = self
            .axes
            .iter()
            .map(|ax| {
                let n = ax.len();
                if n == 1 {
                    return vec![1.0];
                }
                (0..n)
                    .map(|i| {
                        let left = if i > 0 { ax[i] - ax[i - 1] } else { 0.0 };
                        let right = if i + 1 < n { ax[i + 1] - ax[i] } else { 0.0 };
                        0.5 * (left + right)
                    })
                    .collect()
            })
            .collect();
        (0..self.len())
            .map(|node| self.multi_index(node).iter().enumerate().map(|(a, &i)| per_axis[a][i]).product())
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(|ax| ax[ax.len() - 1] - ax[0]).product()
    }
}

/// Nodal values of an `ncomp`-vector field; `values[node * ncomp + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub ncomp: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, ncomp: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * ncomp {
            return Err(Error::Dimension {
                name: "grid field values".into(),
                expected: format!("{} x {}", grid.len(), ncomp),
                actual: values.len().to_string(),
            });
        }
        Ok(Self { grid, ncomp, values })
    }

    pub fn zeros(grid: Grid, ncomp: usize) -> Self {
        let values = vec![0.0; grid.len() * ncomp];
        Self { grid, ncomp, values }
    }

    pub fn from_fn(grid: Grid, ncomp: usize, f: impl Fn(&[f64], &mut [f64])) -> Self {
        let mut values = vec![0.0; grid.len() * ncomp];
        for node in 0..grid.len() {
            let p = grid.point(node);
            f(&p, &mut values[node * ncomp..(node + 1) * ncomp]);
        }
        Self { grid, ncomp, values }
    }

    pub fn get(&self, node: usize, comp: usize) -> f64 {
        self.values[node * self.ncomp + comp]
    }

    pub fn component(&self, comp: usize) -> Vec<f64> {
        self.values.iter().skip(comp).step_by(self.ncomp).copied().collect()
    }

    /// Trapezoid integral of each component.
    pub fn integrate(&self) -> Vec<f64> {
        let w = self.grid.trapezoid_weights();
        let mut acc = vec![0.0; self.ncomp];
        for (node, &wn) in w.iter().enumerate() {
            for (c, a) in acc.iter_mut().enumerate() {
                *a += wn * self.get(node, c);
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Partial derivatives along every axis: second-order central differences in
/// the interior and second-order one-sided stencils at the faces.
pub fn grad_field(field: &GridField) -> Result<Vec<GridField>> {
    let grid = &field.grid;
    let shape = grid.shape();
    if let Some(a) = shape.iter().position(|&n| n < 3) {
        return Err(Error::InvalidInput(format!(
            "gradient needs at least 3 nodes per axis; axis {a} has {}",
            shape[a]
        )));
    }
    let strides = grid.strides();
    let nc = field.ncomp;
    let mut out = Vec::with_capacity(grid.dim());
    for (a, ax) in grid.axes.iter().enumerate() {
        let n = ax.len();
        let stride = strides[a];
        let mut values = vec![0.0; field.values.len()];
        for node in 0..grid.len() {
            let i = (node / stride) % n;
            let (nodes, coefs) = stencil(ax, i);
            let base = node - i * stride;
            for c in 0..nc {
                let mut acc = 0.0;
                for (&j, &w) in nodes.iter().zip(&coefs) {
                    let other = base + j * stride;
                    acc += w * field.values[other * nc + c];
                }
                values[node * nc + c] = acc;
            }
        }
        out.push(GridField { grid: grid.clone(), ncomp: nc, values });
    }
    Ok(out)
}

/// Three-point first-derivative weights at node `i`, exact for quadratics on
/// non-uniform axes.
fn stencil(ax: &[f64], i: usize) -> ([usize; 3], [f64; 3]) {
    let n = ax.len();
    if i == 0 {
        let h1 = ax[1] - ax[0];
        let h2 = ax[2] - ax[1];
        ([0, 1, 2], [-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))])
    } else if i == n - 1 {
        let h1 = ax[n - 2] - ax[n - 3];
        let h2 = ax[n - 1] - ax[n - 2];
        ([n - 3, n - 2, n - 1], [h2 / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), (h1 + 2.0 * h2) / (h2 * (h1 + h2))])
    } else {
        let h1 = ax[i] - ax[i - 1];
        let h2 = ax[i + 1] - ax[i];
        ([i - 1, i, i + 1], [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))])
    }
}
