//! Which exponent of the curve operator gives the most h-stable energy
//! pencil? Usage: `exponent_sweep [2|3]`.

use perfuse::pencil::exponent_sweep;

fn main() -> perfuse::Result<()> {
    let dimension = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2);
    let resolutions: &[usize] = if dimension == 3 { &[4, 8] } else { &[16, 32, 64] };
    let s_values: Vec<f64> = (0..=10).map(|i| -(i as f64) / 10.0).collect();
    let sweep = exponent_sweep(dimension, resolutions, &s_values)?;
    print!("{:>6}", "s");
    for n in resolutions {
        print!("{:>10}", format!("1/h={n}"));
    }
    println!("{:>10}", "max/min");
    for row in &sweep.rows {
        print!("{:>6.2}", row.s);
        for k in &row.kappa {
            print!("{k:>10.3}");
        }
        println!("{:>10.3}", row.variation);
    }
    println!("most h-stable exponent: {}", sweep.most_stable);
    Ok(())
}
