use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row-major dense `f32` matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Seeded uniform entries in `[lo, hi)`.
    pub fn random_uniform(rows: usize, cols: usize, lo: f32, hi: f32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
        DenseMatrix { rows, cols, data }
    }

    /// Builds a matrix from kernel output, rejecting NaN and infinities.
    pub(crate) fn from_output(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        debug_assert_eq!(data.len(), rows * cols);
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy widened to `new_cols` columns with zeros on the right.
    pub fn pad_cols(&self, new_cols: usize) -> DenseMatrix {
        assert!(new_cols >= self.cols);
        if new_cols == self.cols {
            return self.clone();
        }
        let mut data = vec![0.0; self.rows * new_cols];
        for r in 0..self.rows {
            data[r * new_cols..r * new_cols + self.cols].copy_from_slice(self.row(r));
        }
        DenseMatrix {
            rows: self.rows,
            cols: new_cols,
            data,
        }
    }

    /// Keeps the first `cols` columns.
    pub fn truncate_cols(&self, cols: usize) -> DenseMatrix {
        assert!(cols <= self.cols);
        DenseMatrix::from_fn(self.rows, cols, |r, c| self.get(r, c))
    }

    /// Rows reordered so that row `perm[i]` of the result is row `i` here.
    pub fn permute_rows(&self, perm: &[u32]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (i, &p) in perm.iter().enumerate() {
            let p = p as usize;
            out.data[p * self.cols..(p + 1) * self.cols].copy_from_slice(self.row(i));
        }
        out
    }

    pub fn scale_add(&self, alpha: f32, other: &DenseMatrix, beta: f32) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape("scale_add operands differ in shape"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        DenseMatrix::from_output(self.rows, self.cols, data)
    }

    /// `self * rhs`, parallel across output rows.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let n = rhs.cols;
        let mut out = vec![0.0f32; self.rows * n];
        if n > 0 {
            out.par_chunks_mut(n).enumerate().for_each(|(r, orow)| {
                for (k, &a) in self.row(r).iter().enumerate() {
                    for (o, &b) in orow.iter_mut().zip(rhs.row(k)) {
                        *o += a * b;
                    }
                }
            });
        }
        DenseMatrix::from_output(self.rows, n, out)
    }

    pub fn relu_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.max(0.0);
        }
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }
}

/// Normwise relative error `max|a - b| / max|b|` (absolute when `b` is all
/// zero).
pub fn max_rel_err(a: &[f32], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0.0f64, |m, v| m.max((*v as f64).abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((*x as f64 - *y as f64).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Index of the entry with the largest absolute difference.
pub fn worst_index(a: &[f32], b: &[f32]) -> Option<usize> {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
}
