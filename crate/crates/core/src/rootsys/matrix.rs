use nalgebra::DMatrix;
use num_traits::{One, Zero};

use super::{dot, q_to_f64, Q};

/// Square matrix with exact rational entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    dim: usize,
    data: Vec<Q>,
}

impl QMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Q::zero(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Q::one();
        }
        QMatrix { dim, data }
    }

    /// `v ↦ v − 2 (v, α)/(α, α) α`.
    pub fn reflection(alpha: &[Q]) -> Self {
        let dim = alpha.len();
        let norm = dot(alpha, alpha);
        let two = Q::from_integer(2);
        let mut m = Self::identity(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] -= two * alpha[i] * alpha[j] / norm;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Q {
        self.data[i * self.dim + j]
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        let n = self.dim;
        let mut data = vec![Q::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        QMatrix { dim: n, data }
    }

    pub fn apply(&self, v: &[Q]) -> Vec<Q> {
        (0..self.dim)
            .map(|i| dot(&self.data[i * self.dim..(i + 1) * self.dim], v))
            .collect()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| q_to_f64(&self.get(i, j)))
    }
}
