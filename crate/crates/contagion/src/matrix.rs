//! Dense row-major matrix used by the numerical modules.
//!
//! Impact structures here are desk-scale (tens of institutions, a few
//! hundred rows once unfolded), so a flat `Vec<f64>` is all that is needed.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Matrix {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Matrix { rows: n_rows, cols: n_cols, data: rows.into_iter().flatten().collect() }
    }

    pub fn square_from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j)).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row_sum(i)).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, s) in sums.iter_mut().enumerate() {
                *s += self.get(i, j);
            }
        }
        sums
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// y = M x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// y = Mᵀ x (received-impact orientation: y_j = Σ_i M[i,j]·x_i)
    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += self.get(i, j) * xi;
            }
        }
        y
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn scale_col_in_place(&mut self, j: usize, factor: f64) {
        for i in 0..self.rows {
            let v = self.get(i, j);
            self.set(i, j, v * factor);
        }
    }

    /// Square selection: rows and columns restricted to `indices`, in order.
    pub fn select(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(indices.len(), indices.len());
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }
}

/// ‖x‖_∞
pub fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// ‖x − y‖_∞
pub fn inf_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
}

/// ‖x‖₂
pub fn euclid_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_and_products() {
        let m = Matrix::from_rows(vec![vec![0.0, 2.0], vec![3.0, 0.0]]);
        assert_eq!(m.row_sum(0), 2.0);
        assert_eq!(m.col_sum(0), 3.0);
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![2.0, 3.0]);
        assert_eq!(m.transpose_matvec(&[1.0, 1.0]), vec![3.0, 2.0]);
    }

    #[test]
    fn selection_preserves_entries() {
        let m = Matrix::square_from_fn(4, |i, j| (10 * i + j) as f64);
        let s = m.select(&[1, 3]);
        assert_eq!(s.get(0, 0), 11.0);
        assert_eq!(s.get(0, 1), 13.0);
        assert_eq!(s.get(1, 0), 31.0);
        assert_eq!(s.get(1, 1), 33.0);
    }

    #[test]
    fn norms() {
        assert_eq!(inf_norm(&[-3.0, 2.0]), 3.0);
        assert_eq!(inf_distance(&[1.0, 5.0], &[2.0, 3.0]), 2.0);
        assert_eq!(euclid_norm(&[3.0, 4.0]), 5.0);
    }
}
