//! MinRes iteration counts with the block preconditioner.
//!
//! First the default grid (small k and β), then a strongly coupled grid with
//! random right-hand sides in all three blocks.

use perfuse::experiments::{run_iteration_sweep, ExperimentConfig, SweepRhs};

fn main() -> perfuse::Result<()> {
    let base = ExperimentConfig {
        resolutions: Some(vec![16, 32, 64]),
        ..Default::default()
    };
    let table = run_iteration_sweep(&base)?;
    table.write_csv(std::io::stdout())?;

    let strong = ExperimentConfig {
        beta: vec![1e-2, 1.0],
        k: vec![1e-2, 1.0],
        d_gamma: vec![1.0, 1e4],
        rhs: SweepRhs::Random,
        ..base
    };
    let table = run_iteration_sweep(&strong)?;
    println!();
    table.write_csv(std::io::stdout())?;
    println!("\nmax iterations {}, largest ratio across h {:.2}", table.max_iterations(), table.max_h_ratio());
    Ok(())
}
