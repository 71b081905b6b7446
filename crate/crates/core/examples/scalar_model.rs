//! The 3×3 model behind the block preconditioner.
//!
//! Sweeps all five parameters over 10^-4..10^4 and shows where the condition
//! number of the preconditioned matrix is largest.

use perfuse::experiments::{run_scalar_model, ScalarGrid};
use perfuse::precond::{scalar_model_condition, scalar_model_condition_svd};

fn main() -> perfuse::Result<()> {
    println!("unit parameters: cond = {:.4}", scalar_model_condition(1.0, 1.0, 1.0, 1.0, 1.0)?);
    let grid = ScalarGrid {
        min_exponent: -4,
        max_exponent: 4,
        points_per_decade: 2,
    };
    let report = run_scalar_model(&grid)?;
    println!("{} points in [{:e}, {:e}]", report.points, report.lower, report.upper);
    println!("min cond {:.4} at {:?}", report.min_condition, report.argmin);
    println!("max cond {:.4e} at {:?}", report.max_condition, report.argmax);
    let [a1, a2, b1, b2, g] = report.argmax;
    println!("svd check at the maximum: {:.4e}", scalar_model_condition_svd(a1, a2, b1, b2, g)?);
    Ok(())
}
