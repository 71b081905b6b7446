//! Sparse and dense kernels, Krylov solvers and eigenvalue routines.

pub mod banded;
pub mod dense;
pub mod eig;
pub mod krylov;
pub mod lanczos;
pub mod operator;
pub mod sparse;

pub use banded::BandedCholesky;
pub use dense::{singular_values, symmetric_eigen, Cholesky, DenseMatrix, Lu, SymmetricEigen};
pub use eig::{generalized_eigenvalues_dense, generalized_symmetric_eig, generalized_symmetric_eig_dense, SpectralDecomposition};
pub use krylov::{conjugate_gradient, minres, preconditioned_cg, SolverReport};
pub use lanczos::{extreme_eigenvalues, largest_magnitude_eigenvalue, smallest_magnitude_eigenvalue};
pub use operator::{DiagonalOperator, FnOperator, IdentityOperator, LinearOperator};
pub use sparse::{SparseMatrix, TripletBuilder};

/// Sparse matrix-vector product `A x`.
pub fn spmv(a: &SparseMatrix, x: &[f64]) -> crate::Result<Vec<f64>> {
    a.spmv(x)
}
