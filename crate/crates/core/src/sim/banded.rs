//! Banded matrices with an LU factorization using partial pivoting.

use crate::error::{Error, Result};

/// `n×n` matrix with `kl` sub- and `ku` super-diagonals, stored column-wise
/// with room for the `kl` extra super-diagonals that pivoting fills in.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self { n, kl, ku, ld, ab: vec![0.0; ld * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.ld + (self.kl + self.ku + i) - j
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.ab[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` at `(i, j)`; panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.ab[s] += v;
    }

    /// Clears row `i` and puts `v` on the diagonal.
    pub fn set_row_identity(&mut self, i: usize, v: f64) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            let s = self.slot(i, j);
            self.ab[s] = 0.0;
        }
        let s = self.slot(i, i);
        self.ab[s] = v;
    }

    /// `self · x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.ab[self.slot(i, j)] * xj;
            }
            *o = acc;
        }
    }

    /// `α·self + β·other` for matrices sharing the band shape.
    pub fn combine(&self, alpha: f64, other: &BandMatrix, beta: f64) -> BandMatrix {
        assert_eq!((self.n, self.kl, self.ku), (other.n, other.kl, other.ku));
        let ab = self.ab.iter().zip(&other.ab).map(|(a, b)| alpha * a + beta * b).collect();
        BandMatrix { ab, ..self.clone() }
    }

    pub fn identity_like(&self) -> BandMatrix {
        let mut m = BandMatrix::zeros(self.n, self.kl, self.ku);
        for i in 0..self.n {
            m.add(i, i, 1.0);
        }
        m
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.ab[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.ab[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular("banded system"));
            }
            piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[self.slot(k, k)];
            for i in k + 1..=last_row {
                let s = self.slot(i, k);
                let l = self.ab[s] / pivot;
                self.ab[s] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let kj = self.ab[self.slot(k, j)];
                        let ij = self.slot(i, j);
                        self.ab[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(BandLu { lu: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.lu.n
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [f64]) {
        let m = &self.lu;
        let n = m.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n - 1) {
                    b[i] -= m.ab[m.slot(i, k)] * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + m.kl + m.ku).min(n - 1) {
                s -= m.ab[m.slot(i, j)] * b[j];
            }
            b[i] = s / m.ab[m.slot(i, i)];
        }
    }
}
