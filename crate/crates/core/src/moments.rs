use std::ops::{Index, IndexMut};

use crate::basis::Vandermonde;

/// Dense `(N+1) × m` matrix of polynomial chaos coefficients: row `i` holds
/// the order-`i` moment of every state component.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    rows: usize,
    comps: usize,
    data: Vec<f64>,
}

/// Dual (entropy-variable) coefficients share the moment layout.
pub type DualMatrix = MomentMatrix;

impl MomentMatrix {
    pub fn zeros(rows: usize, comps: usize) -> Self {
        Self {
            rows,
            comps,
            data: vec![0.0; rows * comps],
        }
    }

    /// Build from row-major data.
    pub fn from_rows(rows: usize, comps: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * comps, "moment data has wrong length");
        Self { rows, comps, data }
    }

    /// Moments of a state that does not depend on ξ: row 0 holds the state.
    pub fn constant(rows: usize, state: &[f64]) -> Self {
        let mut m = Self::zeros(rows, state.len());
        m.row_mut(0).copy_from_slice(state);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.comps..(i + 1) * self.comps]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.comps..(i + 1) * self.comps]
    }

    /// Frobenius inner product `Σ_{i,k} a_ik b_ik`.
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// Evaluate the expansion `Σ_i row_i φ_i` at a node given the basis
    /// values `phi` there.
    pub fn expand_at(&self, phi: &[f64], out: &mut [f64]) {
        debug_assert_eq!(phi.len(), self.rows);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &p) in phi.iter().enumerate() {
            for (o, &c) in out.iter_mut().zip(self.row(i)) {
                *o += p * c;
            }
        }
    }

    /// Add `weight * φ(ξ_k) ⊗ values` for node `k` of the table.
    pub fn accumulate_node(&mut self, table: &Vandermonde, k: usize, weight: f64, values: &[f64]) {
        for (i, &p) in table.row(k).iter().enumerate() {
            let wp = weight * p;
            for (m, &v) in self.row_mut(i).iter_mut().zip(values) {
                *m += wp * v;
            }
        }
    }
}

impl Index<(usize, usize)> for MomentMatrix {
    type Output = f64;

    fn index(&self, (i, k): (usize, usize)) -> &f64 {
        &self.data[i * self.comps + k]
    }
}

impl IndexMut<(usize, usize)> for MomentMatrix {
    fn index_mut(&mut self, (i, k): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.comps + k]
    }
}
