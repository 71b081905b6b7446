//! Dense symmetric-definite generalized eigensolver.

use crate::error::{check_len, Error, Result};
use crate::linalg::dense::{dot, symmetric_eigen};
use crate::linalg::{DenseMatrix, SparseMatrix};

/// Eigenpairs of `A u = λ M u` normalized so that `U' M U = I`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors.
    pub eigenvectors: DenseMatrix,
    pub mass: SparseMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Coefficients `U' x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eigenvectors.matvec_transpose(x)
    }

    /// `U c`.
    pub fn expand(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.eigenvectors.matvec(c)
    }

    /// Applies `U diag(f(λ)) U' x`.
    pub fn apply_function(&self, x: &[f64], f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let mut c = self.project(x)?;
        for (ci, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *ci *= f(l);
        }
        self.expand(&c)
    }

    /// Largest entry of `|U' M U - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        let mu = DenseMatrix::from_fn(n, n, |_, _| 0.0);
        let mut mu = mu;
        for j in 0..n {
            let col = self.eigenvectors.column(j);
            let mcol = self.mass.spmv(&col).expect("square mass");
            for i in 0..n {
                mu[(i, j)] = dot(&self.eigenvectors.column(i), &mcol);
            }
        }
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((mu[(i, j)] - target).abs());
            }
        }
        err
    }

    /// Largest per-column relative residual `|A u - λ M u| / |A u|`.
    pub fn max_relative_residual(&self, a: &SparseMatrix) -> Result<f64> {
        check_len("eigen residual", self.dim(), a.nrows())?;
        let mut worst = 0.0f64;
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let u = self.eigenvectors.column(j);
            let au = a.spmv(&u)?;
            let mu = self.mass.spmv(&u)?;
            let r: f64 = au.iter().zip(&mu).map(|(p, q)| (p - l * q).powi(2)).sum::<f64>().sqrt();
            let scale = dot(&au, &au).sqrt().max(f64::MIN_POSITIVE);
            worst = worst.max(r / scale);
        }
        Ok(worst)
    }
}

/// Solves `A u = λ M u` for symmetric `A` and SPD `M` by reduction with the
/// Cholesky factor of `M`.
pub fn generalized_symmetric_eig(a: &SparseMatrix, m: &SparseMatrix) -> Result<SpectralDecomposition> {
    check_len("generalized eigenproblem (A rows)", a.nrows(), a.ncols())?;
    check_len("generalized eigenproblem (M size)", a.nrows(), m.nrows())?;
    check_len("generalized eigenproblem (M cols)", m.nrows(), m.ncols())?;
    let (eigenvalues, eigenvectors) = generalized_symmetric_eig_dense(&a.to_dense(), &m.to_dense())?;
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        mass: m.clone(),
    })
}

/// Dense variant returning ascending eigenvalues and `M`-orthonormal
/// eigenvectors as columns.
pub fn generalized_symmetric_eig_dense(a: &DenseMatrix, m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.nrows();
    check_len("generalized eigenproblem (A cols)", n, a.ncols())?;
    check_len("generalized eigenproblem (M size)", n, m.nrows())?;
    let chol = m.cholesky()?;
    let c = reduce(&chol, a);
    let eig = symmetric_eigen(&c, true)?;
    let y = eig.eigenvectors.expect("vectors requested");
    // U = L^{-T} Y, one column at a time via the rows of Y'
    let mut ut = y.transpose();
    for j in 0..n {
        chol.backward_in_place(ut.row_mut(j));
    }
    Ok((eig.eigenvalues, ut.transpose()))
}

/// Eigenvalues only, ascending.
pub fn generalized_eigenvalues_dense(a: &DenseMatrix, m: &DenseMatrix) -> Result<Vec<f64>> {
    check_len("generalized eigenproblem (M size)", a.nrows(), m.nrows())?;
    let chol = m.cholesky()?;
    let c = reduce(&chol, a);
    let eig = symmetric_eigen(&c, false)?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("generalized eigenvalues".into()));
    }
    Ok(eig.eigenvalues)
}

// L^{-1} A L^{-T}, using symmetry of A: (L^{-1} (L^{-1} A)')'
fn reduce(chol: &crate::linalg::dense::Cholesky, a: &DenseMatrix) -> DenseMatrix {
    let x = chol.forward_matrix(a);
    let mut c = chol.forward_matrix(&x.transpose());
    c.symmetrize();
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pencil() {
        let i = SparseMatrix::identity(4);
        let d = generalized_symmetric_eig(&i, &i).unwrap();
        assert!(d.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(d.orthonormality_error() < 1e-14);
    }

    #[test]
    fn diagonal_pencil() {
        let a = SparseMatrix::from_diagonal(&[1.0, 4.0]);
        let d = generalized_symmetric_eig(&a, &SparseMatrix::identity(2)).unwrap();
        assert_eq!(d.eigenvalues.len(), 2);
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1] - 4.0).abs() < 1e-14);
        for i in 0..2 {
            assert!((d.eigenvectors[(i, i)].abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_not_spd_names_pivot() {
        let a = SparseMatrix::identity(3);
        let m = SparseMatrix::from_diagonal(&[1.0, 1.0, -1.0]);
        match generalized_symmetric_eig(&a, &m) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
