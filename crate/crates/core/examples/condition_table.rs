//! Condition numbers of the two coupling pencils on the study geometry.
//!
//! Usage: `condition_table [2|3]`. Runs the default resolutions (dense below
//! 2000 unknowns, Lanczos above) and prints the table as CSV.

use perfuse::experiments::{run_condition_table, ExperimentConfig};

fn main() -> perfuse::Result<()> {
    let dimension = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2);
    let config = ExperimentConfig {
        dimension,
        ..Default::default()
    };
    let table = run_condition_table(&config)?;
    table.write_csv(std::io::stdout())?;
    eprintln!();
    for c in &table.cells {
        match &c.result {
            Ok(r) => eprintln!("{:>6} n={:<4} dofs={:<6} kappa={:.4} ({:?})", c.pencil.label(), c.n, c.dofs, r.kappa, r.method),
            Err(e) => eprintln!("{:>6} n={:<4} failed: {e}", c.pencil.label(), c.n),
        }
    }
    Ok(())
}
