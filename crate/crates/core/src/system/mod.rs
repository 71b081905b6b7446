//! The coupled backward-Euler step and the time loop.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingOperator;
use crate::error::{check_len, Error, Result};
use crate::fem::{assemble_mass, assemble_stiffness, FemVector, FunctionSpace};
use crate::linalg::{minres, DenseMatrix, LinearOperator, Lu, SolverReport, SparseMatrix, TripletBuilder};
use crate::precond::{BlockPreconditioner, FractionalOperator, ProblemParameters, SchurApprox, SpdSolver};

/// Symmetric time-step operator on `[u, û, λ]`:
///
/// ```text
/// [ M_Ω + k D_Ω A_Ω        0              -kβ Π' ]
/// [       0          M_Γ + k D_Γ A_Γ      kβ M_Γ ]
/// [    -kβ Π              kβ M_Γ         -γk M_Γ ]
/// ```
///
/// The last row states `γ λ = β (û - Π u)` weakly, so `λ` is the exchange
/// flux from the vessel into the tissue.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub parameters: ProblemParameters,
    pub mass_omega: SparseMatrix,
    pub stiffness_omega: SparseMatrix,
    pub mass_gamma: SparseMatrix,
    pub stiffness_gamma: SparseMatrix,
    /// Coupling matrix, curve rows by bulk columns.
    pub coupling: SparseMatrix,
    pub omega_space: Arc<FunctionSpace>,
    pub gamma_space: Arc<FunctionSpace>,
    block_omega: SparseMatrix,
    block_gamma: SparseMatrix,
    coupling_t: SparseMatrix,
    offsets: [usize; 4],
}

pub fn assemble_system(
    omega_space: &Arc<FunctionSpace>,
    gamma_space: &Arc<FunctionSpace>,
    coupling: &CouplingOperator,
    p: &ProblemParameters,
) -> Result<BlockSystem> {
    p.validate()?;
    let (no, ng) = (omega_space.dof_count(), gamma_space.dof_count());
    check_len("coupling rows", ng, coupling.pi.nrows())?;
    check_len("coupling columns", no, coupling.pi.ncols())?;
    let mass_omega = assemble_mass(omega_space)?;
    let stiffness_omega = assemble_stiffness(omega_space)?;
    let mass_gamma = assemble_mass(gamma_space)?;
    let stiffness_gamma = assemble_stiffness(gamma_space)?;
    let block_omega = mass_omega.add(1.0, &stiffness_omega, p.k * p.d_omega)?;
    let block_gamma = mass_gamma.add(1.0, &stiffness_gamma, p.k * p.d_gamma)?;
    Ok(BlockSystem {
        parameters: *p,
        coupling_t: coupling.pi.transpose(),
        coupling: coupling.pi.clone(),
        mass_omega,
        stiffness_omega,
        mass_gamma,
        stiffness_gamma,
        omega_space: Arc::clone(omega_space),
        gamma_space: Arc::clone(gamma_space),
        block_omega,
        block_gamma,
        offsets: [0, no, no + ng, no + 2 * ng],
    })
}

impl BlockSystem {
    pub fn offsets(&self) -> [usize; 4] {
        self.offsets
    }

    pub fn omega_dofs(&self) -> usize {
        self.offsets[1]
    }

    pub fn gamma_dofs(&self) -> usize {
        self.offsets[2] - self.offsets[1]
    }

    /// Block `(i, j)` with zero-based indices; `None` for structural zeros.
    pub fn block(&self, i: usize, j: usize) -> Option<SparseMatrix> {
        let p = &self.parameters;
        let kb = p.k * p.beta;
        match (i, j) {
            (0, 0) => Some(self.block_omega.clone()),
            (1, 1) => Some(self.block_gamma.clone()),
            (0, 2) => Some(self.coupling_t.scaled(-kb)),
            (2, 0) => Some(self.coupling.scaled(-kb)),
            (1, 2) | (2, 1) => Some(self.mass_gamma.scaled(kb)),
            (2, 2) => Some(self.mass_gamma.scaled(-p.gamma * p.k)),
            _ => None,
        }
    }

    /// The whole operator as one sparse matrix.
    pub fn to_sparse(&self) -> SparseMatrix {
        let n = self.offsets[3];
        let mut t = TripletBuilder::new(n, n);
        for i in 0..3 {
            for j in 0..3 {
                if let Some(b) = self.block(i, j) {
                    for (r, c, v) in b.triplets() {
                        t.push(self.offsets[i] + r, self.offsets[j] + c, v);
                    }
                }
            }
        }
        t.build()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.to_sparse().to_dense()
    }

    /// Right-hand side of one step from `prev` with bulk source `source`.
    pub fn rhs(&self, prev: &State, source: Option<&[f64]>) -> Result<Vec<f64>> {
        check_len("previous tissue state", self.omega_dofs(), prev.u.len())?;
        check_len("previous vessel state", self.gamma_dofs(), prev.u_hat.len())?;
        let mut load = prev.u.coefficients.clone();
        if let Some(f) = source {
            check_len("source", self.omega_dofs(), f.len())?;
            load.iter_mut().zip(f).for_each(|(l, fi)| *l += self.parameters.k * fi);
        }
        let mut rhs = self.mass_omega.spmv(&load)?;
        rhs.extend(self.mass_gamma.spmv(&prev.u_hat.coefficients)?);
        rhs.extend(std::iter::repeat(0.0).take(self.gamma_dofs()));
        Ok(rhs)
    }

    /// `∫_Ω u + ∫_Γ û`.
    pub fn total_mass(&self, state: &State) -> Result<f64> {
        let a: f64 = self.mass_omega.spmv(&state.u.coefficients)?.iter().sum();
        let b: f64 = self.mass_gamma.spmv(&state.u_hat.coefficients)?.iter().sum();
        Ok(a + b)
    }

    /// Curve operator decomposition used by the Schur approximation.
    pub fn fractional(&self) -> Result<FractionalOperator> {
        FractionalOperator::from_matrices(&self.stiffness_gamma, &self.mass_gamma)
    }

    /// Block preconditioner with the given tissue-block solver. The vessel
    /// block is factored densely.
    pub fn preconditioner(&self, h: f64, tissue: TissueSolver) -> Result<BlockPreconditioner> {
        let block_omega = match tissue {
            TissueSolver::Cg { rtol } => SpdSolver::cg(self.block_omega.clone(), rtol),
            TissueSolver::Banded => SpdSolver::banded(&self.block_omega)?,
            TissueSolver::Dense => SpdSolver::dense(&self.block_omega)?,
        };
        Ok(BlockPreconditioner {
            parameters: self.parameters,
            block_omega,
            block_gamma: SpdSolver::dense(&self.block_gamma)?,
            schur: SchurApprox::new(&self.parameters, h, self.fractional()?)?,
        })
    }
}

impl LinearOperator for BlockSystem {
    fn dim(&self) -> usize {
        self.offsets[3]
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("block system input", self.dim(), x.len())?;
        let p = &self.parameters;
        let kb = p.k * p.beta;
        let [_, a, b, _] = self.offsets;
        let (xo, xg, xl) = (&x[..a], &x[a..b], &x[b..]);
        let (yo, rest) = y.split_at_mut(a);
        let (yg, yl) = rest.split_at_mut(b - a);
        self.block_omega.spmv_into(xo, yo)?;
        self.coupling_t.spmv_add(-kb, xl, yo)?;
        self.block_gamma.spmv_into(xg, yg)?;
        self.mass_gamma.spmv_add(kb, xl, yg)?;
        self.mass_gamma.spmv_into(xl, yl)?;
        yl.iter_mut().for_each(|v| *v *= -p.gamma * p.k);
        self.coupling.spmv_add(-kb, xo, yl)?;
        self.mass_gamma.spmv_add(kb, xg, yl)?;
        Ok(())
    }
}

/// How the tissue block of the preconditioner is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TissueSolver {
    Cg { rtol: f64 },
    Banded,
    Dense,
}

/// Coefficients of the three fields at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: FemVector,
    pub u_hat: FemVector,
    pub lambda: FemVector,
    pub time: f64,
}

impl State {
    pub fn zeros(system: &BlockSystem) -> State {
        State {
            u: FemVector::zeros(Arc::clone(&system.omega_space)),
            u_hat: FemVector::zeros(Arc::clone(&system.gamma_space)),
            lambda: FemVector::zeros(Arc::clone(&system.gamma_space)),
            time: 0.0,
        }
    }

    pub fn from_block_vector(system: &BlockSystem, x: &[f64], time: f64) -> Result<State> {
        check_len("block vector", system.dim(), x.len())?;
        let [_, a, b, _] = system.offsets;
        let state = State {
            u: FemVector::new(Arc::clone(&system.omega_space), x[..a].to_vec())?,
            u_hat: FemVector::new(Arc::clone(&system.gamma_space), x[a..b].to_vec())?,
            lambda: FemVector::new(Arc::clone(&system.gamma_space), x[b..].to_vec())?,
            time,
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state".into()));
        }
        Ok(state)
    }

    pub fn to_block_vector(&self) -> Vec<f64> {
        let mut x = self.u.coefficients.clone();
        x.extend_from_slice(&self.u_hat.coefficients);
        x.extend_from_slice(&self.lambda.coefficients);
        x
    }
}

/// Prescribed vessel values at selected curve dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dirichlet {
    pub dofs: Vec<usize>,
    pub values: Vec<f64>,
}

/// One backward-Euler step ready to solve.
#[derive(Debug, Clone)]
pub struct TimeStepProblem<'a> {
    pub system: &'a BlockSystem,
    pub rhs: Vec<f64>,
    pub dirichlet: Option<Dirichlet>,
    /// Time at the end of the step.
    pub time: f64,
}

impl<'a> TimeStepProblem<'a> {
    pub fn new(system: &'a BlockSystem, prev: &State, source: Option<&[f64]>, dirichlet: Option<Dirichlet>) -> Result<Self> {
        if let Some(d) = &dirichlet {
            check_len("dirichlet values", d.dofs.len(), d.values.len())?;
            if let Some(&q) = d.dofs.iter().find(|&&q| q >= system.gamma_dofs()) {
                return Err(Error::InvalidParameter(format!("dirichlet dof {q} is not a curve dof")));
            }
        }
        Ok(TimeStepProblem {
            system,
            rhs: system.rhs(prev, source)?,
            dirichlet,
            time: prev.time + system.parameters.k,
        })
    }

    /// Global indices of the constrained unknowns.
    fn constrained(&self) -> Vec<usize> {
        let off = self.system.offsets[1];
        self.dirichlet.iter().flat_map(|d| d.dofs.iter().map(move |q| off + q)).collect()
    }

    /// Right-hand side after moving the prescribed values over; constrained
    /// rows hold `diag * value`.
    fn constrained_rhs(&self, diag: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = self.rhs.clone();
        if let Some(d) = &self.dirichlet {
            let off = self.system.offsets[1];
            let mut lift = vec![0.0; self.system.dim()];
            for (&q, &g) in d.dofs.iter().zip(&d.values) {
                lift[off + q] = g;
            }
            let a_lift = self.system.apply_vec(&lift)?;
            rhs.iter_mut().zip(&a_lift).for_each(|(r, a)| *r -= a);
            for (&q, &g) in d.dofs.iter().zip(&d.values) {
                rhs[off + q] = diag[off + q] * g;
            }
        }
        Ok(rhs)
    }
}

/// Operator with constrained rows and columns replaced by their diagonal.
struct Constrained<'a> {
    system: &'a BlockSystem,
    mask: Vec<bool>,
    diag: Vec<f64>,
}

impl LinearOperator for Constrained<'_> {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let free: Vec<f64> = x.iter().zip(&self.mask).map(|(v, &c)| if c { 0.0 } else { *v }).collect();
        self.system.apply(&free, y)?;
        for (i, &c) in self.mask.iter().enumerate() {
            if c {
                y[i] = self.diag[i] * x[i];
            }
        }
        Ok(())
    }
}

/// Linear solver for the step.
pub enum StepSolver {
    /// Preconditioned MinRes stopped at preconditioned residual `atol`.
    MinRes {
        preconditioner: BlockPreconditioner,
        atol: f64,
        maxiter: usize,
    },
    /// LU factors of the (constrained) dense operator, for a fixed set of
    /// constrained dofs.
    Dense { lu: Lu, constrained: Vec<usize> },
}

impl StepSolver {
    /// Factors the dense operator with the given curve dofs constrained.
    pub fn dense(system: &BlockSystem, constrained_gamma_dofs: &[usize]) -> Result<StepSolver> {
        let mut a = system.to_dense();
        let off = system.offsets[1];
        let constrained: Vec<usize> = constrained_gamma_dofs.iter().map(|q| off + q).collect();
        for &c in &constrained {
            let d = a[(c, c)];
            for j in 0..a.ncols() {
                a[(c, j)] = 0.0;
                a[(j, c)] = 0.0;
            }
            a[(c, c)] = d;
        }
        Ok(StepSolver::Dense { lu: a.lu()?, constrained })
    }
}

/// Solves one step.
pub fn step(problem: &TimeStepProblem<'_>, solver: &StepSolver) -> Result<(State, SolverReport)> {
    let system = problem.system;
    let constrained = problem.constrained();
    let diag = system.to_sparse().diagonal();
    let rhs = problem.constrained_rhs(&diag)?;
    let (x, report) = match solver {
        StepSolver::Dense { lu, constrained: factored } => {
            let mut want = constrained.clone();
            let mut have = factored.clone();
            want.sort_unstable();
            have.sort_unstable();
            if want != have {
                return Err(Error::InvalidParameter("dense factors were built for a different constraint set".into()));
            }
            let x = lu.solve(&rhs)?;
            let ax = system_residual_norm(system, &constrained, &diag, &x, &rhs)?;
            let report = SolverReport {
                iterations: 1,
                converged: true,
                final_residual_norm: ax,
                residual_history: vec![norm(&rhs), ax],
            };
            (x, report)
        }
        StepSolver::MinRes {
            preconditioner,
            atol,
            maxiter,
        } => {
            let mut mask = vec![false; system.dim()];
            constrained.iter().for_each(|&c| mask[c] = true);
            let op = Constrained { system, mask, diag };
            let (x, report) = minres(&op, preconditioner, &rhs, *atol, *maxiter)?;
            if !report.converged {
                return Err(Error::NotConverged(Box::new(report)));
            }
            (x, report)
        }
    };
    Ok((State::from_block_vector(system, &x, problem.time)?, report))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn system_residual_norm(system: &BlockSystem, constrained: &[usize], diag: &[f64], x: &[f64], rhs: &[f64]) -> Result<f64> {
    let mut mask = vec![false; system.dim()];
    constrained.iter().for_each(|&c| mask[c] = true);
    let op = Constrained { system, mask, diag: diag.to_vec() };
    let ax = op.apply_vec(x)?;
    Ok(ax.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}

/// Inflow value over time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InletSchedule {
    /// No constraint: homogeneous Neumann everywhere.
    Free,
    Constant(f64),
    /// `high` for steps `1..=switch_step`, `low` afterwards.
    UptakeClearance { switch_step: usize, high: f64, low: f64 },
}

impl InletSchedule {
    /// Value imposed during step `step` (1-based), if any.
    pub fn value(&self, step: usize) -> Option<f64> {
        match *self {
            InletSchedule::Free => None,
            InletSchedule::Constant(v) => Some(v),
            InletSchedule::UptakeClearance { switch_step, high, low } => Some(if step <= switch_step { high } else { low }),
        }
    }
}

/// Per-step scalar observables of a transient run, including the initial
/// state at index 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransientHistory {
    pub times: Vec<f64>,
    /// `∫_Ω u / |Ω|`.
    pub tissue_mean: Vec<f64>,
    /// Weighted mean of `û` with the supplied vessel weights.
    pub vessel_mean: Vec<f64>,
    pub total_mass: Vec<f64>,
    pub iterations: Vec<usize>,
}

/// Runs `n_steps` backward-Euler steps with the inflow imposed at the curve
/// dofs `inlets`. `vessel_weights` define the vessel mean. `on_step` sees
/// every new state.
#[allow(clippy::too_many_arguments)]
pub fn run_transient(
    system: &BlockSystem,
    initial: State,
    schedule: InletSchedule,
    inlets: &[usize],
    n_steps: usize,
    solver: &StepSolver,
    vessel_weights: &[f64],
    mut on_step: impl FnMut(usize, &State) -> Result<()>,
) -> Result<(State, TransientHistory)> {
    check_len("vessel weights", system.gamma_dofs(), vessel_weights.len())?;
    let volume: f64 = system.mass_omega.values().iter().sum();
    let wsum: f64 = vessel_weights.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::InvalidParameter("vessel weights must have a positive sum".into()));
    }
    let mut history = TransientHistory::default();
    let observe = |h: &mut TransientHistory, s: &State, iterations: usize| -> Result<()> {
        let mu: f64 = system.mass_omega.spmv(&s.u.coefficients)?.iter().sum();
        let vw: f64 = s.u_hat.coefficients.iter().zip(vessel_weights).map(|(a, b)| a * b).sum();
        h.times.push(s.time);
        h.tissue_mean.push(mu / volume);
        h.vessel_mean.push(vw / wsum);
        h.total_mass.push(system.total_mass(s)?);
        h.iterations.push(iterations);
        Ok(())
    };
    observe(&mut history, &initial, 0)?;
    let mut state = initial;
    for n in 1..=n_steps {
        let dirichlet = schedule.value(n).map(|g| Dirichlet {
            dofs: inlets.to_vec(),
            values: vec![g; inlets.len()],
        });
        let problem = TimeStepProblem::new(system, &state, None, dirichlet)?;
        let (next, report) = step(&problem, solver)?;
        observe(&mut history, &next, report.iterations)?;
        on_step(n, &next)?;
        state = next;
    }
    Ok((state, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::interpolate;
    use crate::study::StudyDiscretization;

    fn system(dim: usize, n: usize, p: ProblemParameters) -> (StudyDiscretization, BlockSystem) {
        let disc = StudyDiscretization::new(dim, n, 0.02).unwrap();
        let sys = assemble_system(&disc.omega, &disc.gamma, &disc.coupling, &p).unwrap();
        (disc, sys)
    }

    fn bump(x: [f64; 3]) -> f64 {
        (std::f64::consts::PI * x[0]).cos() + x[1] * x[1]
    }

    #[test]
    fn operator_is_symmetric_and_matches_matrix() {
        for dim in [2, 3] {
            let p = ProblemParameters { beta: 3.0, k: 0.5, gamma: 2.0, ..Default::default() };
            let (_, sys) = system(dim, 4, p);
            let a = sys.to_dense();
            let n = a.nrows();
            for i in 0..n {
                for j in 0..i {
                    assert!((a[(i, j)] - a[(j, i)]).abs() < 1e-12);
                }
            }
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let y = sys.apply_vec(&x).unwrap();
            let z = sys.to_sparse().spmv(&x).unwrap();
            for (p, q) in y.iter().zip(&z) {
                assert!((p - q).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn multiplier_row_measures_exchange() {
        // With u = 0 and û = 1 the third row gives γ λ = β weakly.
        let p = ProblemParameters { beta: 2.0, gamma: 4.0, k: 1.0, ..Default::default() };
        let (_, sys) = system(2, 4, p);
        let lam = vec![0.5; sys.gamma_dofs()];
        let mut x = vec![0.0; sys.omega_dofs()];
        x.extend(vec![1.0; sys.gamma_dofs()]);
        x.extend(&lam);
        let y = sys.apply_vec(&x).unwrap();
        for v in &y[sys.offsets()[2]..] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_steps_conserve_mass() {
        let p = ProblemParameters { beta: 5.0, k: 0.05, d_gamma: 10.0, ..Default::default() };
        for dim in [2, 3] {
            let (disc, sys) = system(dim, 4, p);
            let solver = StepSolver::dense(&sys, &[]).unwrap();
            let mut state = State::zeros(&sys);
            state.u = interpolate(&disc.omega, bump).unwrap();
            let m0 = sys.total_mass(&state).unwrap();
            for _ in 0..5 {
                let problem = TimeStepProblem::new(&sys, &state, None, None).unwrap();
                state = step(&problem, &solver).unwrap().0;
                assert!((sys.total_mass(&state).unwrap() - m0).abs() < 1e-12 * m0.abs());
            }
            assert!(state.u_hat.coefficients.iter().any(|v| v.abs() > 1e-6));
        }
    }

    #[test]
    fn dense_and_minres_agree() {
        let p = ProblemParameters { beta: 1.0, k: 0.1, d_gamma: 100.0, ..Default::default() };
        let (disc, sys) = system(2, 4, p);
        let mut prev = State::zeros(&sys);
        prev.u = interpolate(&disc.omega, bump).unwrap();
        let dirichlet = Dirichlet { dofs: vec![0], values: vec![1.0] };
        let problem = TimeStepProblem::new(&sys, &prev, None, Some(dirichlet)).unwrap();
        let dense = step(&problem, &StepSolver::dense(&sys, &[0]).unwrap()).unwrap().0;
        let iterative = StepSolver::MinRes {
            preconditioner: sys.preconditioner(disc.h(), TissueSolver::Cg { rtol: 1e-13 }).unwrap(),
            atol: 1e-13,
            maxiter: 500,
        };
        let (x, report) = step(&problem, &iterative).unwrap();
        assert!(report.converged);
        assert!((dense.u_hat.coefficients[0] - 1.0).abs() < 1e-12);
        for (a, b) in dense.to_block_vector().iter().zip(&x.to_block_vector()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let (_, sys) = system(2, 4, ProblemParameters::default());
        let solver = StepSolver::dense(&sys, &[0]).unwrap();
        let w = vec![1.0; sys.gamma_dofs()];
        let (_, h) = run_transient(&sys, State::zeros(&sys), InletSchedule::Constant(0.0), &[0], 3, &solver, &w, |_, _| Ok(())).unwrap();
        assert!(h.tissue_mean.iter().chain(&h.vessel_mean).all(|v| *v == 0.0));
        assert_eq!(h.times.len(), 4);
    }

    #[test]
    fn dense_solver_rejects_other_constraints() {
        let (_, sys) = system(2, 4, ProblemParameters::default());
        let state = State::zeros(&sys);
        let problem = TimeStepProblem::new(&sys, &state, None, Some(Dirichlet { dofs: vec![1], values: vec![0.0] })).unwrap();
        let solver = StepSolver::dense(&sys, &[0]).unwrap();
        assert!(matches!(step(&problem, &solver), Err(Error::InvalidParameter(_))));
    }
}
