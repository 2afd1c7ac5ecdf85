//! Compressed-row matrices and a sparse LU wrapper.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Accumulates `(row, col, value)` entries; duplicates are summed on build.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    /// Append every entry of `m` shifted by `(row_offset, col_offset)`,
    /// scaled by `scale`.
    pub fn push_block(&mut self, m: &CsrMatrix, row_offset: usize, col_offset: usize, scale: f64) {
        for (r, c, v) in m.iter() {
            self.push(r + row_offset, c + col_offset, scale * v);
        }
    }

    /// Append the transpose of `m` shifted by the offsets.
    pub fn push_block_transposed(&mut self, m: &CsrMatrix, row_offset: usize, col_offset: usize, scale: f64) {
        for (r, c, v) in m.iter() {
            self.push(c + row_offset, r + col_offset, scale * v);
        }
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y += scale * A x`
    pub fn mul_add(&self, x: &[f64], scale: f64, y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            *yr += scale * acc;
        }
    }

    /// `y += scale * A^T x`
    pub fn mul_transpose_add(&self, x: &[f64], scale: f64, y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (c, v) in self.row(r) {
                y[c] += scale * v * xr;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_add(x, 1.0, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (r, c, v) in self.iter() {
            b.push(c, r, v);
        }
        b.build()
    }

    /// Copy of the rows `rows` and columns `cols`, re-indexed from zero.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CsrMatrix {
        let mut b = TripletBuilder::new(rows.len(), cols.len());
        for r in rows.clone() {
            for (c, v) in self.row(r) {
                if cols.contains(&c) {
                    b.push(r - rows.start, c - cols.start, v);
                }
            }
        }
        b.build()
    }

    /// Largest `|A_ij - A_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let t = self.transpose();
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for (r, c, v) in self.iter() {
            worst = worst.max((v - t.get(r, c)).abs());
        }
        for (r, c, v) in t.iter() {
            worst = worst.max((v - self.get(r, c)).abs());
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.iter() {
            d[r][c] += v;
        }
        d
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            self.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::<usize, f64>::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::Factorization(format!("sparse matrix build failed: {e:?}")))
    }
}

/// Sparse LU with partial pivoting and a fill-reducing column ordering.
///
/// Rows and columns are equilibrated before factorization and each solve
/// performs up to two steps of iterative refinement against the original
/// matrix, which keeps badly scaled coupled systems accurate.
pub struct SparseLu {
    n: usize,
    matrix: CsrMatrix,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).field("nnz", &self.matrix.nnz()).finish()
    }
}

impl SparseLu {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Dimension { expected: n, got: matrix.ncols() });
        }
        if matrix.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Factorization("matrix contains NaN/Inf".into()));
        }
        let mut row_scale = vec![0.0f64; n];
        for (r, _, v) in matrix.iter() {
            row_scale[r] = row_scale[r].max(v.abs());
        }
        if let Some(r) = row_scale.iter().position(|&s| s == 0.0) {
            return Err(Error::Factorization(format!("row {r} is empty (structurally singular)")));
        }
        row_scale.iter_mut().for_each(|s| *s = 1.0 / *s);
        let mut col_scale = vec![0.0f64; n];
        for (r, c, v) in matrix.iter() {
            col_scale[c] = col_scale[c].max((v * row_scale[r]).abs());
        }
        if let Some(c) = col_scale.iter().position(|&s| s == 0.0) {
            return Err(Error::Factorization(format!("column {c} is empty (structurally singular)")));
        }
        col_scale.iter_mut().for_each(|s| *s = 1.0 / *s);

        let mut b = TripletBuilder::with_capacity(n, n, matrix.nnz());
        for (r, c, v) in matrix.iter() {
            b.push(r, c, row_scale[r] * v * col_scale[c]);
        }
        let scaled = b.build().to_faer()?;
        let lu = scaled
            .sp_lu()
            .map_err(|e| Error::Factorization(format!("sparse LU failed: {e:?}")))?;
        let this = Self { n, matrix: matrix.clone(), row_scale, col_scale, lu };
        // A numerically singular matrix factors "successfully" but produces
        // garbage; probe with a solve.
        let probe: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64).collect();
        let x = this.solve_raw(&probe);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Factorization("matrix is numerically singular".into()));
        }
        Ok(this)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    fn solve_raw(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| self.row_scale[i] * b[i]);
        let x = self.lu.solve(rhs);
        (0..self.n).map(|i| self.col_scale[i] * x[(i, 0)]).collect()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        if b.iter().all(|&v| v == 0.0) {
            return vec![0.0; self.n];
        }
        let mut x = self.solve_raw(b);
        for _ in 0..2 {
            let mut r = b.to_vec();
            self.matrix.mul_add(&x, -1.0, &mut r);
            let dx = self.solve_raw(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        }
        x
    }
}
