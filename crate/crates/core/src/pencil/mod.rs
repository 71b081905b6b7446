//! Generalized eigenvalue problems measuring how well the multiplier space
//! norms match the coupling.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fem::{assemble_mass, assemble_stiffness};
use crate::linalg::{
    generalized_eigenvalues_dense, largest_magnitude_eigenvalue, minres, smallest_magnitude_eigenvalue, BandedCholesky, Cholesky,
    LinearOperator, SparseMatrix, TripletBuilder,
};
use crate::precond::FractionalOperator;
use crate::study::StudyDiscretization;

/// Pencils are solved densely up to this many unknowns and by Lanczos above.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PencilKind {
    /// `[[M, Π'], [Π, 0]]` against `diag(M, h⁻¹ M_Γ)`.
    #[serde(rename = "mass")]
    Mass,
    /// `[[A, Π'], [Π, 0]]` against `diag(A + M, H_s)`.
    #[serde(rename = "energy")]
    Energy,
}

impl PencilKind {
    pub fn label(self) -> &'static str {
        match self {
            PencilKind::Mass => "mass",
            PencilKind::Energy => "energy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PencilSpec {
    pub kind: PencilKind,
    pub dimension: usize,
    pub n: usize,
    /// Exponent of the curve operator; only used by the energy pencil.
    pub s: Option<f64>,
    pub radius: f64,
}

impl PencilSpec {
    pub fn mass(dimension: usize, n: usize) -> Self {
        PencilSpec {
            kind: PencilKind::Mass,
            dimension,
            n,
            s: None,
            radius: 0.02,
        }
    }

    pub fn energy(dimension: usize, n: usize, s: f64) -> Self {
        PencilSpec {
            kind: PencilKind::Energy,
            dimension,
            n,
            s: Some(s),
            radius: 0.02,
        }
    }

    fn exponent(&self) -> Result<f64> {
        match (self.kind, self.s) {
            (PencilKind::Mass, None) => Ok(0.0),
            (PencilKind::Mass, Some(_)) => Err(Error::InvalidParameter("the mass pencil takes no exponent".into())),
            (PencilKind::Energy, Some(s)) if (-1.0..=0.0).contains(&s) => Ok(s),
            (PencilKind::Energy, s) => Err(Error::InvalidParameter(format!("energy pencil needs an exponent in [-1, 0], got {s:?}"))),
        }
    }
}

/// Symmetric pencil `lhs x = λ rhs x` with block-diagonal SPD `rhs`.
#[derive(Debug, Clone)]
pub struct Pencil {
    pub lhs: SparseMatrix,
    pub rhs: SparseMatrix,
    /// Leading block of `rhs` (bulk unknowns).
    pub rhs_omega: SparseMatrix,
    /// Trailing block of `rhs` (curve unknowns).
    pub rhs_gamma: SparseMatrix,
}

impl Pencil {
    pub fn dim(&self) -> usize {
        self.lhs.nrows()
    }
}

/// Assembles the pencil of `spec` on an existing discretization.
pub fn build_pencil(spec: &PencilSpec, disc: &StudyDiscretization) -> Result<Pencil> {
    let s = spec.exponent()?;
    let mass = assemble_mass(&disc.omega)?;
    let (top, rhs_omega) = match spec.kind {
        PencilKind::Mass => (mass.clone(), mass),
        PencilKind::Energy => {
            let a = assemble_stiffness(&disc.omega)?;
            let am = a.add(1.0, &mass, 1.0)?;
            (a, am)
        }
    };
    let rhs_gamma = match spec.kind {
        PencilKind::Mass => assemble_mass(&disc.gamma)?.scaled(1.0 / disc.h()),
        PencilKind::Energy => {
            let frac = FractionalOperator::from_matrices(&assemble_stiffness(&disc.gamma)?, &assemble_mass(&disc.gamma)?)?;
            dense_to_sparse(&frac.matrix(s))
        }
    };
    let pi = &disc.coupling.pi;
    let (no, ng) = (top.nrows(), pi.nrows());
    check_len("coupling columns", no, pi.ncols())?;
    let n = no + ng;
    let mut lhs = TripletBuilder::new(n, n);
    for (i, j, v) in top.triplets() {
        lhs.push(i, j, v);
    }
    for (q, i, v) in pi.triplets() {
        lhs.push(no + q, i, v);
        lhs.push(i, no + q, v);
    }
    let mut rhs = TripletBuilder::new(n, n);
    for (i, j, v) in rhs_omega.triplets() {
        rhs.push(i, j, v);
    }
    for (i, j, v) in rhs_gamma.triplets() {
        rhs.push(no + i, no + j, v);
    }
    Ok(Pencil {
        lhs: lhs.build(),
        rhs: rhs.build(),
        rhs_omega,
        rhs_gamma,
    })
}

fn dense_to_sparse(d: &crate::linalg::DenseMatrix) -> SparseMatrix {
    let mut t = TripletBuilder::new(d.nrows(), d.ncols());
    for i in 0..d.nrows() {
        for (j, &v) in d.row(i).iter().enumerate() {
            if v != 0.0 {
                t.push(i, j, v);
            }
        }
    }
    t.build()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub kappa: f64,
    pub lambda_min_abs: f64,
    pub lambda_max_abs: f64,
    pub method: EigenMethod,
}

impl ConditionResult {
    fn new(lambda_min_abs: f64, lambda_max_abs: f64, method: EigenMethod) -> Result<Self> {
        if !(lambda_min_abs > 1e-12 * lambda_max_abs) {
            return Err(Error::Breakdown(format!(
                "pencil is singular (|λ|min = {lambda_min_abs:e}); the coupling lacks full row rank"
            )));
        }
        Ok(ConditionResult {
            kappa: lambda_max_abs / lambda_min_abs,
            lambda_min_abs,
            lambda_max_abs,
            method,
        })
    }
}

/// Settings of the iterative path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    pub tol: f64,
    pub max_steps: usize,
    /// Relative tolerance of the inner MinRes solves in the shift-invert run.
    pub inner_rtol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-8,
            max_steps: 300,
            inner_rtol: 1e-11,
        }
    }
}

/// `κ = max|λ| / min|λ|` for `spec`, dense up to [`DENSE_LIMIT`] unknowns.
pub fn condition_number(spec: &PencilSpec) -> Result<ConditionResult> {
    let disc = StudyDiscretization::new(spec.dimension, spec.n, spec.radius)?;
    let pencil = build_pencil(spec, &disc)?;
    if pencil.dim() <= DENSE_LIMIT {
        dense_condition(&pencil)
    } else {
        lanczos_condition(&pencil, &LanczosOptions::default())
    }
}

pub fn dense_condition(p: &Pencil) -> Result<ConditionResult> {
    let ev = generalized_eigenvalues_dense(&p.lhs.to_dense(), &p.rhs.to_dense())?;
    let (lo, hi) = abs_extremes(&ev);
    ConditionResult::new(lo, hi, EigenMethod::Dense)
}

fn abs_extremes(ev: &[f64]) -> (f64, f64) {
    ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())))
}

/// Inverse of the block-diagonal `rhs`: banded Cholesky on the bulk block,
/// dense Cholesky on the curve block.
struct RhsInverse {
    omega: BandedCholesky,
    gamma: Cholesky,
}

impl LinearOperator for RhsInverse {
    fn dim(&self) -> usize {
        self.omega.dim() + self.gamma.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("pencil rhs inverse", self.dim(), x.len())?;
        let no = self.omega.dim();
        y.copy_from_slice(x);
        let (yo, yg) = y.split_at_mut(no);
        self.omega.solve_in_place(yo);
        self.gamma.forward_in_place(yg);
        self.gamma.backward_in_place(yg);
        Ok(())
    }
}

/// `lhs⁻¹` by MinRes preconditioned with `rhs⁻¹`.
struct LhsInverse<'a> {
    lhs: &'a SparseMatrix,
    precond: &'a RhsInverse,
    rtol: f64,
}

impl LinearOperator for LhsInverse<'_> {
    fn dim(&self) -> usize {
        self.lhs.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let bx = self.precond.apply_vec(x)?;
        let bnorm = crate::linalg::dense::dot(x, &bx).sqrt();
        if bnorm == 0.0 {
            y.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        let (sol, report) = minres(self.lhs, self.precond, x, self.rtol * bnorm, 20 * self.dim())?;
        if !report.converged {
            return Err(Error::NotConverged(Box::new(report)));
        }
        y.copy_from_slice(&sol);
        Ok(())
    }
}

pub fn lanczos_condition(p: &Pencil, opts: &LanczosOptions) -> Result<ConditionResult> {
    let binv = RhsInverse {
        omega: BandedCholesky::factor(&p.rhs_omega)?,
        gamma: p.rhs_gamma.to_dense().cholesky()?,
    };
    let hi = largest_magnitude_eigenvalue(&p.lhs, &binv, opts.max_steps, opts.tol)?;
    let solve = LhsInverse {
        lhs: &p.lhs,
        precond: &binv,
        rtol: opts.inner_rtol,
    };
    let lo = smallest_magnitude_eigenvalue(&solve, &p.rhs, opts.max_steps, opts.tol)?;
    ConditionResult::new(lo, hi, EigenMethod::Lanczos)
}

/// One row of an exponent sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub s: f64,
    /// `κ` for each resolution, in the order given.
    pub kappa: Vec<f64>,
    /// `max κ / min κ` over the resolutions.
    pub variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSweep {
    pub dimension: usize,
    pub resolutions: Vec<usize>,
    pub rows: Vec<ExponentRow>,
    /// Exponent with the smallest variation across resolutions.
    pub most_stable: f64,
}

/// Energy-pencil condition numbers for each exponent and resolution.
pub fn exponent_sweep(dimension: usize, resolutions: &[usize], s_values: &[f64]) -> Result<ExponentSweep> {
    if resolutions.is_empty() || s_values.is_empty() {
        return Err(Error::InvalidParameter("exponent sweep needs resolutions and exponents".into()));
    }
    let mut rows: Vec<ExponentRow> = s_values
        .iter()
        .map(|&s| ExponentRow {
            s,
            kappa: Vec::new(),
            variation: 0.0,
        })
        .collect();
    for &n in resolutions {
        let disc = StudyDiscretization::new(dimension, n, 0.02)?;
        for row in rows.iter_mut() {
            let spec = PencilSpec {
                n,
                ..PencilSpec::energy(dimension, n, row.s)
            };
            let pencil = build_pencil(&spec, &disc)?;
            let result = if pencil.dim() <= DENSE_LIMIT {
                dense_condition(&pencil)?
            } else {
                lanczos_condition(&pencil, &LanczosOptions::default())?
            };
            row.kappa.push(result.kappa);
        }
    }
    for row in rows.iter_mut() {
        let (lo, hi) = row.kappa.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &k| (a.min(k), b.max(k)));
        row.variation = hi / lo;
    }
    let most_stable = rows
        .iter()
        .min_by(|a, b| a.variation.total_cmp(&b.variation))
        .map(|r| r.s)
        .unwrap_or(f64::NAN);
    Ok(ExponentSweep {
        dimension,
        resolutions: resolutions.to_vec(),
        rows,
        most_stable,
    })
}
