//! Cholesky factorization in variable-free band storage.
//!
//! Lattice meshes numbered lexicographically have a bandwidth of roughly one
//! lattice plane, which keeps the factor small enough for the repeated solves
//! needed by shift-invert eigenvalue iterations.

use crate::error::{check_len, Error, Result};
use crate::linalg::operator::LinearOperator;
use crate::linalg::SparseMatrix;

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row `i` holds `L[i, i-bw..=i]`, left-padded with zeros.
    rows: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        check_len("banded cholesky (square)", a.nrows(), a.ncols())?;
        let n = a.nrows();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut rows = vec![0.0; n * w];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    rows[i * w + (j + bw - i)] = v;
                }
            }
        }
        for i in 0..n {
            let i0 = i.saturating_sub(bw);
            for j in i0..=i {
                // s = A[i][j] - sum_{k in [max(i0, j-bw), j)} L[i][k] L[j][k]
                let k0 = i0.max(j.saturating_sub(bw));
                let mut s = rows[i * w + (j + bw - i)];
                let li = &rows[i * w + (k0 + bw - i)..i * w + (j + bw - i)];
                let lj = &rows[j * w + (k0 + bw - j)..j * w + bw];
                s -= crate::linalg::dense::dot(li, lj);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { index: i, value: s });
                    }
                    rows[i * w + bw] = s.sqrt();
                } else {
                    rows[i * w + (j + bw - i)] = s / rows[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, rows })
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let i0 = i.saturating_sub(bw);
            let row = &self.rows[i * w + (i0 + bw - i)..i * w + bw];
            let s = x[i] - crate::linalg::dense::dot(row, &x[i0..i]);
            x[i] = s / self.rows[i * w + bw];
        }
        for i in (0..n).rev() {
            x[i] /= self.rows[i * w + bw];
            let xi = x[i];
            let i0 = i.saturating_sub(bw);
            let row = &self.rows[i * w + (i0 + bw - i)..i * w + bw];
            for (xk, l) in x[i0..i].iter_mut().zip(row) {
                *xk -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("banded cholesky solve", self.n, b.len())?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}

impl LinearOperator for BandedCholesky {
    fn dim(&self) -> usize {
        self.n
    }

    /// Applies the inverse of the factored matrix.
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("banded cholesky solve", self.n, x.len())?;
        y.copy_from_slice(x);
        self.solve_in_place(y);
        Ok(())
    }
}
