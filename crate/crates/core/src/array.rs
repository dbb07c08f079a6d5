//! Small dense containers: one `d`-vector per agent, and square `N x N` matrices.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// `N` agents, each carrying a vector in `R^d`. Stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentVectors {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl AgentVectors {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            data: vec![0.0; n * d],
        }
    }

    pub fn from_flat(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::Shape {
                expected: format!("{} values ({n} x {d})", n * d),
                found: format!("{} values", data.len()),
            });
        }
        Ok(Self { n, d, data })
    }

    /// Builds from one row per agent; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::Shape {
                    expected: format!("row {i} of length {d}"),
                    found: format!("length {}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, d, data })
    }

    /// Every agent carries the same vector `u`.
    pub fn uniform(n: usize, u: &[f64]) -> Self {
        let mut data = Vec::with_capacity(n * u.len());
        for _ in 0..n {
            data.extend_from_slice(u);
        }
        Self { n, d: u.len(), data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero chunk size
        self.data.chunks_exact(self.d.max(1)).take(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n == other.n && self.d == other.d
    }

    pub(crate) fn check_shape(&self, n: usize, d: usize, what: &str) -> Result<()> {
        if self.n != n || self.d != d {
            return Err(Error::Shape {
                expected: format!("{what}: {n} x {d}"),
                found: format!("{} x {}", self.n, self.d),
            });
        }
        Ok(())
    }

    /// `self + a * other`, elementwise.
    pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        let data = self.data.iter().zip(&other.data).map(|(x, y)| x + a * y).collect();
        Self {
            n: self.n,
            d: self.d,
            data,
        }
    }

    /// Convex blend `(1 - theta) * self + theta * other`.
    pub fn lerp(&self, other: &Self, theta: f64) -> Self {
        debug_assert!(self.same_shape(other));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (1.0 - theta) * x + theta * y)
            .collect();
        Self {
            n: self.n,
            d: self.d,
            data,
        }
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.squared_distance(i, j).sqrt()
    }
}

impl Index<(usize, usize)> for AgentVectors {
    type Output = f64;

    #[inline]
    fn index(&self, (i, k): (usize, usize)) -> &f64 {
        &self.data[i * self.d + k]
    }
}

impl IndexMut<(usize, usize)> for AgentVectors {
    #[inline]
    fn index_mut(&mut self, (i, k): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.d + k]
    }
}

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::Shape {
                    expected: format!("row {i} of length {n}"),
                    found: format!("length {}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Applies the matrix to each coordinate of a stack of agent vectors: `(A v)_i = sum_j A_ij v_j`.
    pub fn apply(&self, v: &AgentVectors) -> AgentVectors {
        debug_assert_eq!(self.n, v.n());
        let mut out = AgentVectors::zeros(v.n(), v.dim());
        for i in 0..self.n {
            for j in 0..self.n {
                let a = self[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for (o, x) in out.row_mut(i).iter_mut().zip(v.row(j)) {
                    *o += a * x;
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_must_be_rectangular() {
        assert!(AgentVectors::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        let a = AgentVectors::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a[(1, 0)], 3.0);
        assert_eq!(a.to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn apply_matches_hand_product() {
        let m = SquareMatrix::from_rows(&[[2.0, -1.0], [-1.0, 2.0]]).unwrap();
        let v = AgentVectors::from_rows(&[[1.0], [3.0]]).unwrap();
        assert_eq!(m.apply(&v).as_slice(), &[-1.0, 5.0]);
    }
}
