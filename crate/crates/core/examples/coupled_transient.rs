//! A 2D transient with inflow at the base of the T-shaped curve, solved with
//! preconditioned MinRes. Prints the means and writes the final state to
//! `coupled_transient.vtk` in the working directory.

use perfuse::fem::save_vtk;
use perfuse::linalg::LinearOperator;
use perfuse::precond::ProblemParameters;
use perfuse::study::StudyDiscretization;
use perfuse::system::{assemble_system, run_transient, InletSchedule, State, StepSolver, TissueSolver};

fn main() -> perfuse::Result<()> {
    let disc = StudyDiscretization::new(2, 32, 0.02)?;
    let params = ProblemParameters {
        d_omega: 1e-2,
        d_gamma: 1.0,
        beta: 5.0,
        k: 0.01,
        ..Default::default()
    };
    let system = assemble_system(&disc.omega, &disc.gamma, &disc.coupling, &params)?;
    let solver = StepSolver::MinRes {
        preconditioner: system.preconditioner(disc.h(), TissueSolver::Cg { rtol: 1e-12 })?,
        atol: 1e-10,
        maxiter: 200,
    };
    let weights = vec![1.0; system.gamma_dofs()];
    println!("unknowns {}", system.dim());
    let (last, history) = run_transient(
        &system,
        State::zeros(&system),
        InletSchedule::Constant(1.0),
        &disc.curve.inlets,
        40,
        &solver,
        &weights,
        |_, _| Ok(()),
    )?;
    println!("{:>6} {:>10} {:>10} {:>6}", "t", "tissue", "vessel", "iters");
    for i in (0..history.times.len()).step_by(5) {
        println!(
            "{:>6.2} {:>10.5} {:>10.5} {:>6}",
            history.times[i], history.tissue_mean[i], history.vessel_mean[i], history.iterations[i]
        );
    }
    save_vtk(std::path::Path::new("coupled_transient.vtk"), &disc.mesh, &[("u", &last.u)])?;
    Ok(())
}
