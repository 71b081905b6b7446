//! Fractional powers of the curve operator on the 2D study curve.
//!
//! Checks H_0 = M, H_1 = A + M and H_a M⁻¹ H_b = H_{a+b}, then
//! prints the smallest and largest generalized eigenvalues.

use perfuse::fem::{assemble_mass, assemble_stiffness};
use perfuse::precond::build_fractional;
use perfuse::study::StudyDiscretization;

fn main() -> perfuse::Result<()> {
    let disc = StudyDiscretization::new(2, 64, 0.02)?;
    let h = build_fractional(&disc.gamma)?;
    let m = assemble_mass(&disc.gamma)?.to_dense();
    let am = assemble_stiffness(&disc.gamma)?.add(1.0, &assemble_mass(&disc.gamma)?, 1.0)?.to_dense();

    println!("curve dofs              {}", h.dim());
    println!("|H_0 - M|_F             {:.3e}", h.matrix(0.0).frobenius_distance(&m));
    println!("|H_1 - (A+M)|_F / |A+M| {:.3e}", h.matrix(1.0).frobenius_distance(&am) / am.frobenius_norm());

    let x: Vec<f64> = (0..h.dim()).map(|i| (0.3 * i as f64).cos()).collect();
    let y = h.apply(-0.5, &h.mass_inverse(&h.apply(-0.25, &x)?)?)?;
    let z = h.apply(-0.75, &x)?;
    let err = y.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
    println!("|H_-0.5 M^-1 H_-0.25 x - H_-0.75 x| / |H_-0.75 x| {:.3e}", err / scale);

    let ev = h.eigenvalues();
    println!("eigenvalues in [{:.4}, {:.4e}]", ev[0], ev[ev.len() - 1]);
    Ok(())
}
