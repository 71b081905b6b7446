use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{csv_row, fmt_f64, par_map, ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::fem::interpolate;
use crate::precond::ProblemParameters;
use crate::study::StudyDiscretization;
use crate::system::{assemble_system, step, State, StepSolver, TimeStepProblem, TissueSolver};

/// Right-hand side of each sweep solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepRhs {
    /// One time step from `u = f = Π sin(π x_i)`, with `û` its curve values.
    Smooth,
    /// Seeded uniform noise in all three blocks.
    Random,
}

/// MinRes iteration counts, one row per `(D_Γ, β, k)` and one column per
/// resolution; `-1` marks a solve that did not converge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTable {
    pub dimension: usize,
    pub resolutions: Vec<usize>,
    /// `(D_Γ, β, k)` per row.
    pub parameters: Vec<[f64; 3]>,
    pub counts: Vec<Vec<i64>>,
}

impl IterationTable {
    pub fn max_iterations(&self) -> i64 {
        self.counts.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn failed_cells(&self) -> usize {
        self.counts.iter().flatten().filter(|&&c| c < 0).count()
    }

    /// Largest `max/min` count ratio across resolutions within one row.
    pub fn max_h_ratio(&self) -> f64 {
        self.counts
            .iter()
            .filter(|row| row.iter().all(|&c| c > 0))
            .map(|row| {
                let hi = *row.iter().max().unwrap_or(&1) as f64;
                let lo = *row.iter().min().unwrap_or(&1) as f64;
                hi / lo
            })
            .fold(1.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["d_gamma".to_string(), "beta".into(), "k".into()];
        header.extend(self.resolutions.iter().map(|n| format!("1/h={n}")));
        csv_row(&mut w, header)?;
        for (p, row) in self.parameters.iter().zip(&self.counts) {
            let mut fields: Vec<String> = p.iter().map(|v| fmt_f64(*v)).collect();
            fields.extend(row.iter().map(|c| c.to_string()));
            csv_row(&mut w, fields)?;
        }
        w.flush().map_err(|e| Error::io("csv output", e))?;
        Ok(())
    }
}

/// One preconditioned MinRes solve per grid cell. The tissue block is
/// inverted by Jacobi-CG, the vessel block by Cholesky.
pub fn run_iteration_sweep(config: &ExperimentConfig) -> Result<IterationTable> {
    config.validate(ExperimentKind::IterationSweep)?;
    let dim = config.dimension;
    let resolutions = config.resolutions();
    let mut parameters = Vec::new();
    for &dg in &config.d_gamma {
        for &b in &config.beta {
            for &k in &config.k {
                parameters.push([dg, b, k]);
            }
        }
    }
    let mut counts = vec![Vec::with_capacity(resolutions.len()); parameters.len()];
    for &n in &resolutions {
        let disc = StudyDiscretization::new(dim, n, config.radius)?;
        let column = par_map(&parameters, |&[d_gamma, beta, k]| {
            let p = ProblemParameters {
                d_omega: config.d_omega,
                d_gamma,
                beta,
                k,
                gamma: config.gamma,
                radius: config.radius,
                exponent_s: config.exponent(),
            };
            match solve_cell(&disc, &p, config) {
                Ok(it) => it as i64,
                Err(_) => -1,
            }
        });
        for (row, c) in counts.iter_mut().zip(column) {
            row.push(c);
        }
    }
    Ok(IterationTable {
        dimension: dim,
        resolutions,
        parameters,
        counts,
    })
}

fn solve_cell(disc: &StudyDiscretization, p: &ProblemParameters, config: &ExperimentConfig) -> Result<usize> {
    let dim = disc.dim();
    let system = assemble_system(&disc.omega, &disc.gamma, &disc.coupling, p)?;
    let problem = match config.rhs {
        SweepRhs::Smooth => {
            let field = |x: [f64; 3]| (0..dim).map(|i| (std::f64::consts::PI * x[i]).sin()).product::<f64>();
            let mut prev = State::zeros(&system);
            prev.u = interpolate(&disc.omega, field)?;
            prev.u_hat = interpolate(&disc.gamma, field)?;
            let source = prev.u.coefficients.clone();
            TimeStepProblem::new(&system, &prev, Some(&source), None)?
        }
        SweepRhs::Random => {
            let mut problem = TimeStepProblem::new(&system, &State::zeros(&system), None, None)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            problem.rhs.iter_mut().for_each(|v| *v = rng.gen::<f64>() - 0.5);
            problem
        }
    };
    let solver = StepSolver::MinRes {
        preconditioner: system.preconditioner(disc.h(), TissueSolver::Cg { rtol: 1e-12 })?,
        atol: config.atol,
        maxiter: config.max_iterations,
    };
    let (_, report) = step(&problem, &solver)?;
    Ok(report.iterations)
}
