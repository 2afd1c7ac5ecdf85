//! Small dense matrices on the interface (at most a few hundred rows).

use faer::linalg::solvers::{Llt, PartialPivLu, Solve};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self { n, m, data: vec![0.0; n * m] }
    }

    /// Build column by column from `f(j) -> column j`.
    pub fn from_columns(n: usize, m: usize, mut f: impl FnMut(usize) -> Vec<f64>) -> Self {
        let mut a = Self::zeros(n, m);
        for j in 0..m {
            let col = f(j);
            assert_eq!(col.len(), n);
            for (i, v) in col.into_iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        a
    }

    pub fn from_sparse(s: &CsrMatrix) -> Self {
        let mut a = Self::zeros(s.nrows(), s.ncols());
        for (r, c, v) in s.iter() {
            a[(r, c)] = v;
        }
        a
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.m);
        self.data.chunks(self.m.max(1)).take(self.n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.m, other.n);
        let mut c = DenseMatrix::zeros(self.n, other.m);
        for i in 0..self.n {
            for k in 0..self.m {
                let a = self[(i, k)];
                if a != 0.0 {
                    for j in 0..other.m {
                        c[(i, j)] += a * other[(k, j)];
                    }
                }
            }
        }
        c
    }

    pub fn add_scaled(&self, other: &DenseMatrix, s: f64) -> DenseMatrix {
        assert_eq!((self.n, self.m), (other.n, other.m));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect();
        DenseMatrix { n: self.n, m: self.m, data }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.m, self.n);
        for i in 0..self.n {
            for j in 0..self.m {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `max |a_ij - a_ji| / max |a_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                d = d.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        d / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.m, |i, j| self[(i, j)])
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<f64>> {
        let sym = Mat::from_fn(self.n, self.n, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]));
        sym.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Factorization(format!("eigenvalue solver failed: {e:?}")))
    }

    pub fn lu(&self) -> Result<DenseLu> {
        if self.n != self.m {
            return Err(Error::Dimension { expected: self.n, got: self.m });
        }
        let lu = self.to_faer().partial_piv_lu();
        let x = solve_with(&lu, &vec![1.0; self.n]);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Factorization("dense matrix is singular".into()));
        }
        Ok(DenseLu { lu })
    }

    pub fn cholesky(&self) -> Result<DenseCholesky> {
        let llt = self
            .to_faer()
            .llt(Side::Lower)
            .map_err(|e| Error::Factorization(format!("Cholesky failed: {e:?}")))?;
        Ok(DenseCholesky { n: self.n, llt })
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.m + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.m + j]
    }
}

fn solve_with(s: &impl Solve<f64>, b: &[f64]) -> Vec<f64> {
    let rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
    let x = s.solve(&rhs);
    (0..b.len()).map(|i| x[(i, 0)]).collect()
}

pub struct DenseLu {
    lu: PartialPivLu<f64>,
}

impl DenseLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        solve_with(&self.lu, b)
    }
}

impl std::fmt::Debug for DenseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenseLu").finish_non_exhaustive()
    }
}

pub struct DenseCholesky {
    n: usize,
    llt: Llt<f64>,
}

impl DenseCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        solve_with(&self.llt, b)
    }
}

impl std::fmt::Debug for DenseCholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenseCholesky").field("n", &self.n).finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 4.0;
            if i + 1 < n {
                a[(i, i + 1)] = -1.0;
                a[(i + 1, i)] = -1.0;
            }
        }
        a
    }

    #[test]
    fn cholesky_and_lu_agree() {
        let a = spd(6);
        let b: Vec<f64> = (0..6).map(|i| i as f64 - 2.0).collect();
        let x1 = a.cholesky().unwrap().solve(&b);
        let x2 = a.lu().unwrap().solve(&b);
        let r = a.mul_vec(&x1);
        for i in 0..6 {
            assert!((x1[i] - x2[i]).abs() < 1e-14);
            assert!((r[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn indefinite_cholesky_fails() {
        let mut a = spd(3);
        a[(1, 1)] = -1.0;
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn eigenvalues_of_tridiagonal() {
        let n = 5;
        let ev = spd(n).symmetric_eigenvalues().unwrap();
        for (k, l) in ev.iter().enumerate() {
            let exact = 4.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!(ev.iter().any(|e| (e - exact).abs() < 1e-12), "{l}");
        }
    }

    #[test]
    fn matmul_transpose() {
        let a = DenseMatrix::from_columns(2, 3, |j| vec![j as f64, 1.0 + j as f64]);
        let ata = a.transpose().matmul(&a);
        assert_eq!(ata.symmetry_defect(), 0.0);
        assert_eq!(ata[(2, 2)], 4.0 + 9.0);
    }
}
