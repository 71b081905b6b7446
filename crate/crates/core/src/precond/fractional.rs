use crate::error::{check_len, Result};
use crate::fem::{assemble_mass, assemble_stiffness, FunctionSpace};
use crate::linalg::{generalized_symmetric_eig, DenseMatrix, SparseMatrix, SpectralDecomposition};

/// Fractional powers of `A + M` on the curve, where `A` is the stiffness and
/// `M` the mass matrix: `H_s = M U Λ^s (M U)'` with `(A + M) U = M U Λ`.
#[derive(Debug, Clone)]
pub struct FractionalOperator {
    pub decomposition: SpectralDecomposition,
    mass_u: DenseMatrix,
}

/// Assembles the curve matrices and decomposes `A + M` against `M`.
pub fn build_fractional(gamma_space: &FunctionSpace) -> Result<FractionalOperator> {
    let m = assemble_mass(gamma_space)?;
    let a = assemble_stiffness(gamma_space)?;
    FractionalOperator::from_matrices(&a, &m)
}

impl FractionalOperator {
    pub fn from_matrices(stiffness: &SparseMatrix, mass: &SparseMatrix) -> Result<Self> {
        let shifted = stiffness.add(1.0, mass, 1.0)?;
        let decomposition = generalized_symmetric_eig(&shifted, mass)?;
        let mass_u = mass.to_dense().matmul(&decomposition.eigenvectors)?;
        Ok(FractionalOperator { decomposition, mass_u })
    }

    pub fn dim(&self) -> usize {
        self.decomposition.dim()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.decomposition.eigenvalues
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.decomposition.mass
    }

    /// `U diag(d) U' v`.
    pub fn spectral_apply(&self, v: &[f64], d: &[f64]) -> Result<Vec<f64>> {
        check_len("spectral weights", self.dim(), d.len())?;
        let mut c = self.decomposition.project(v)?;
        c.iter_mut().zip(d).for_each(|(ci, di)| *ci *= di);
        self.decomposition.expand(&c)
    }

    /// `M⁻¹ v = U U' v`.
    pub fn mass_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        let c = self.decomposition.project(v)?;
        self.decomposition.expand(&c)
    }

    /// `H_s x`.
    pub fn apply(&self, s: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut c = self.mass_u.matvec_transpose(x)?;
        c.iter_mut().zip(self.eigenvalues()).for_each(|(ci, l)| *ci *= l.powf(s));
        self.mass_u.matvec(&c)
    }

    /// `H_s⁻¹ x = U Λ^{-s} U' x`.
    pub fn apply_inverse(&self, s: f64, x: &[f64]) -> Result<Vec<f64>> {
        let d: Vec<f64> = self.eigenvalues().iter().map(|l| l.powf(-s)).collect();
        self.spectral_apply(x, &d)
    }

    /// Dense `H_s`.
    pub fn matrix(&self, s: f64) -> DenseMatrix {
        let n = self.dim();
        let scaled = DenseMatrix::from_fn(n, n, |i, j| self.mass_u[(i, j)] * self.eigenvalues()[j].powf(s));
        let mut h = scaled.matmul(&self.mass_u.transpose()).expect("square factors");
        h.symmetrize();
        h
    }
}
