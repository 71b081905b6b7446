//! Block-diagonal preconditioner for the coupled time-step operator,
//! fractional powers of the curve operator and the scalar model problem.

mod fractional;
mod scalar;

pub use fractional::{build_fractional, FractionalOperator};
pub use scalar::{scalar_model_condition, scalar_model_condition_svd, scalar_model_matrices};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{preconditioned_cg, BandedCholesky, Cholesky, DiagonalOperator, LinearOperator, SparseMatrix};

/// Scalars of the coupled model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParameters {
    /// Diffusion coefficient in the bulk.
    pub d_omega: f64,
    /// Diffusion coefficient along the curve.
    pub d_gamma: f64,
    /// Exchange coefficient.
    pub beta: f64,
    /// Time step.
    pub k: f64,
    /// Weight of the multiplier mass term.
    pub gamma: f64,
    /// Averaging radius.
    pub radius: f64,
    /// Exponent of the curve operator in the Schur approximation.
    pub exponent_s: f64,
}

impl Default for ProblemParameters {
    fn default() -> Self {
        ProblemParameters {
            d_omega: 1.0,
            d_gamma: 1.0,
            beta: 1.0,
            k: 1.0,
            gamma: 1.0,
            radius: 0.02,
            exponent_s: -0.5,
        }
    }
}

impl ProblemParameters {
    /// Default exponent for the given bulk dimension.
    pub fn default_exponent(dim: usize) -> f64 {
        if dim == 3 {
            -0.55
        } else {
            -0.5
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_omega", self.d_omega),
            ("d_gamma", self.d_gamma),
            ("beta", self.beta),
            ("k", self.k),
            ("radius", self.radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be nonnegative, got {}", self.gamma)));
        }
        if !(-1.0..=0.0).contains(&self.exponent_s) {
            return Err(Error::InvalidParameter(format!("exponent_s must lie in [-1, 0], got {}", self.exponent_s)));
        }
        Ok(())
    }
}

/// Solver for a symmetric positive definite block.
#[derive(Debug, Clone)]
pub enum SpdSolver {
    /// Jacobi-preconditioned CG to a relative tolerance.
    Cg {
        matrix: SparseMatrix,
        jacobi: DiagonalOperator,
        rtol: f64,
        maxiter: usize,
    },
    Dense(Cholesky),
    Banded(BandedCholesky),
}

impl SpdSolver {
    pub fn cg(matrix: SparseMatrix, rtol: f64) -> Self {
        let jacobi = DiagonalOperator::jacobi(&matrix);
        let maxiter = 10 * matrix.nrows() + 100;
        SpdSolver::Cg {
            matrix,
            jacobi,
            rtol,
            maxiter,
        }
    }

    pub fn dense(matrix: &SparseMatrix) -> Result<Self> {
        Ok(SpdSolver::Dense(matrix.to_dense().cholesky()?))
    }

    pub fn banded(matrix: &SparseMatrix) -> Result<Self> {
        Ok(SpdSolver::Banded(BandedCholesky::factor(matrix)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            SpdSolver::Cg { matrix, .. } => matrix.nrows(),
            SpdSolver::Dense(c) => c.dim(),
            SpdSolver::Banded(b) => b.dim(),
        }
    }

    /// Solves into `x`; `block` names the block in error messages.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64], block: &str) -> Result<()> {
        match self {
            SpdSolver::Cg {
                matrix,
                jacobi,
                rtol,
                maxiter,
            } => {
                let (sol, report) = preconditioned_cg(matrix, jacobi, b, None, *rtol, *maxiter)?;
                if !report.converged {
                    return Err(Error::InnerSolve {
                        block: block.to_string(),
                        iterations: report.iterations,
                        residual: report.final_residual_norm,
                    });
                }
                x.copy_from_slice(&sol);
            }
            SpdSolver::Dense(c) => {
                x.copy_from_slice(b);
                c.forward_in_place(x);
                c.backward_in_place(x);
            }
            SpdSolver::Banded(f) => {
                x.copy_from_slice(b);
                f.solve_in_place(x);
            }
        }
        Ok(())
    }
}

/// `S = S1⁻¹ + S2⁻¹`, the approximate inverse of the multiplier Schur
/// complement.
///
/// `S1⁻¹ = M⁻¹ / (γ + (kβ)²(1 + h⁻¹))` treats the averaging product as
/// `h⁻¹` times the identity. `S2⁻¹` is diagonal in the curve eigenbasis with
/// entries `1 / (γ + (kβ)²/(k D_Ω) λ^s + (kβ)²/(k D_Γ) λ⁻¹)`.
#[derive(Debug, Clone)]
pub struct SchurApprox {
    pub s1_scale: f64,
    pub mass_gamma: SparseMatrix,
    fractional: FractionalOperator,
    s2_diagonal: Vec<f64>,
}

impl SchurApprox {
    pub fn new(params: &ProblemParameters, h: f64, fractional: FractionalOperator) -> Result<Self> {
        params.validate()?;
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("mesh size must be positive, got {h}")));
        }
        let kb2 = (params.k * params.beta).powi(2);
        let s1_scale = params.gamma + kb2 * (1.0 + 1.0 / h);
        let s = params.exponent_s;
        let s2_diagonal = fractional
            .eigenvalues()
            .iter()
            .map(|&l| {
                let denom = params.gamma + kb2 / (params.k * params.d_omega) * l.powf(s) + kb2 / (params.k * params.d_gamma) / l;
                1.0 / denom
            })
            .collect();
        Ok(SchurApprox {
            s1_scale,
            mass_gamma: fractional.mass().clone(),
            fractional,
            s2_diagonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.s2_diagonal.len()
    }

    pub fn s1_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.fractional.mass_inverse(v)?;
        y.iter_mut().for_each(|x| *x /= self.s1_scale);
        Ok(y)
    }

    pub fn s2_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.fractional.spectral_apply(v, &self.s2_diagonal)
    }

    /// `S2` itself, `M U diag(1/d) U' M`, for checks.
    pub fn s2(&self, v: &[f64]) -> Result<Vec<f64>> {
        let inv: Vec<f64> = self.s2_diagonal.iter().map(|d| 1.0 / d).collect();
        let mv = self.mass_gamma.spmv(v)?;
        let y = self.fractional.spectral_apply(&mv, &inv)?;
        self.mass_gamma.spmv(&y)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut a = self.s1_inverse(v)?;
        let b = self.s2_inverse(v)?;
        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
        Ok(a)
    }
}

pub fn schur_apply(schur: &SchurApprox, v: &[f64]) -> Result<Vec<f64>> {
    schur.apply(v)
}

/// `diag((M_Ω + k D_Ω A_Ω)⁻¹, (M_Γ + k D_Γ A_Γ)⁻¹, S)` acting on vectors
/// laid out as `[u, û, λ]`.
#[derive(Debug, Clone)]
pub struct BlockPreconditioner {
    pub parameters: ProblemParameters,
    pub block_omega: SpdSolver,
    pub block_gamma: SpdSolver,
    pub schur: SchurApprox,
}

impl BlockPreconditioner {
    pub fn sizes(&self) -> (usize, usize) {
        (self.block_omega.dim(), self.block_gamma.dim())
    }
}

impl LinearOperator for BlockPreconditioner {
    fn dim(&self) -> usize {
        let (no, ng) = self.sizes();
        no + 2 * ng
    }

    fn apply(&self, r: &[f64], y: &mut [f64]) -> Result<()> {
        let (no, ng) = self.sizes();
        check_len("block preconditioner input", no + 2 * ng, r.len())?;
        let (yo, rest) = y.split_at_mut(no);
        let (yg, yl) = rest.split_at_mut(ng);
        self.block_omega.solve_into(&r[..no], yo, "tissue")?;
        self.block_gamma.solve_into(&r[no..no + ng], yg, "vessel")?;
        yl.copy_from_slice(&self.schur.apply(&r[no + ng..])?);
        Ok(())
    }
}

pub fn apply_preconditioner(b: &BlockPreconditioner, r: &[f64]) -> Result<Vec<f64>> {
    b.apply_vec(r)
}
