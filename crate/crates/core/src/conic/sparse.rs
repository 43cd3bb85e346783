//! Compressed sparse column matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Unordered `(row, col, value)` entries; duplicates are summed on
/// compression.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows.push(row);
        self.cols.push(col);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_csc(&self) -> Result<CscMatrix> {
        CscMatrix::from_triplets(self)
    }
}

/// Column-compressed matrix with sorted, unique row indices per column.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            colptr: (0..=n).collect(),
            rowind: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from a dense row-major slice, dropping exact zeros.
    pub fn from_dense(nrows: usize, ncols: usize, dense: &[f64]) -> Self {
        let mut t = Triplets::new(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                let v = dense[i * ncols + j];
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        Self::from_triplets(&t).expect("indices in range by construction")
    }

    pub fn from_triplets(t: &Triplets) -> Result<Self> {
        if t.rows.len() != t.values.len() || t.cols.len() != t.values.len() {
            return Err(Error::Dimension("triplet arrays differ in length".into()));
        }
        if let Some(k) = (0..t.len()).find(|&k| t.rows[k] >= t.nrows || t.cols[k] >= t.ncols) {
            return Err(Error::Dimension(alloc::format!(
                "triplet ({}, {}) outside {}x{}",
                t.rows[k],
                t.cols[k],
                t.nrows,
                t.ncols
            )));
        }
        let mut colptr = vec![0usize; t.ncols + 1];
        for &c in &t.cols {
            colptr[c + 1] += 1;
        }
        for j in 0..t.ncols {
            colptr[j + 1] += colptr[j];
        }
        let mut next = colptr.clone();
        let mut rowind = vec![0usize; t.len()];
        let mut values = vec![0.0; t.len()];
        for k in 0..t.len() {
            let dst = next[t.cols[k]];
            rowind[dst] = t.rows[k];
            values[dst] = t.values[k];
            next[t.cols[k]] += 1;
        }
        // Sort each column and merge duplicates.
        let mut out_ptr = vec![0usize; t.ncols + 1];
        let mut out_rows = Vec::with_capacity(t.len());
        let mut out_vals = Vec::with_capacity(t.len());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..t.ncols {
            scratch.clear();
            scratch.extend((colptr[j]..colptr[j + 1]).map(|p| (rowind[p], values[p])));
            scratch.sort_by_key(|e| e.0);
            for &(r, v) in &scratch {
                if out_rows.len() > out_ptr[j] && *out_rows.last().unwrap() == r {
                    *out_vals.last_mut().unwrap() += v;
                } else {
                    out_rows.push(r);
                    out_vals.push(v);
                }
            }
            out_ptr[j + 1] = out_rows.len();
        }
        Ok(Self {
            nrows: t.nrows,
            ncols: t.ncols,
            colptr: out_ptr,
            rowind: out_rows,
            values: out_vals,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.colptr[j]..self.colptr[j + 1]).map(move |p| (self.rowind[p], self.values[p]))
    }

    /// Iterates `(row, col, value)` in column order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| self.col(j).map(move |(i, v)| (i, j, v)))
    }

    /// `y += alpha * A x`
    pub fn gemv(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for j in 0..self.ncols {
            let xj = alpha * x[j];
            if xj != 0.0 {
                for p in self.colptr[j]..self.colptr[j + 1] {
                    y[self.rowind[p]] += self.values[p] * xj;
                }
            }
        }
    }

    /// `y += alpha * A^T x`
    pub fn gemv_t(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for p in self.colptr[j]..self.colptr[j + 1] {
                acc += self.values[p] * x[self.rowind[p]];
            }
            y[j] += alpha * acc;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Triplets::new(self.ncols, self.nrows);
        for (i, j, v) in self.iter() {
            t.push(j, i, v);
        }
        Self::from_triplets(&t).expect("transpose of a valid matrix")
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Row-major dense copy, for tests and debugging.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows * self.ncols];
        for (i, j, v) in self.iter() {
            d[i * self.ncols + j] += v;
        }
        d
    }
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
