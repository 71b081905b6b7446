use crate::error::{Error, Result};
use crate::linalg::{singular_values, DenseMatrix};

/// The 3×3 model operator and its block-diagonal preconditioner.
///
/// `A = [[1+α1, 0, β1], [0, 1+α2, β2], [β1, β2, -γ]]` and
/// `B = diag(1/(1+α1), 1/(1+α2), 1/(γ+β1²+β2²) + 1/(γ+β1²/α1+β2²/α2))`.
pub fn scalar_model_matrices(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64, gamma: f64) -> Result<(DenseMatrix, DenseMatrix)> {
    check_positive(alpha1, alpha2, beta1, beta2, gamma)?;
    let a = DenseMatrix::from_row_major(
        3,
        3,
        vec![1.0 + alpha1, 0.0, beta1, 0.0, 1.0 + alpha2, beta2, beta1, beta2, -gamma],
    )?;
    let schur = 1.0 / (gamma + beta1 * beta1 + beta2 * beta2) + 1.0 / (gamma + beta1 * beta1 / alpha1 + beta2 * beta2 / alpha2);
    let b = DenseMatrix::from_diagonal(&[1.0 / (1.0 + alpha1), 1.0 / (1.0 + alpha2), schur]);
    Ok((a, b))
}

fn check_positive(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64, gamma: f64) -> Result<()> {
    for (name, v) in [("alpha1", alpha1), ("alpha2", alpha2), ("beta1", beta1), ("beta2", beta2), ("gamma", gamma)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Spectral condition number `max|λ| / min|λ|` of `B A`.
///
/// `B A` is similar to the symmetric `B^{1/2} A B^{1/2}`, whose singular
/// values are the moduli of its eigenvalues. With the leading blocks scaled to
/// one that matrix has closed-form eigenvalues.
pub fn scalar_model_condition(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64, gamma: f64) -> Result<f64> {
    check_positive(alpha1, alpha2, beta1, beta2, gamma)?;
    let schur = 1.0 / (gamma + beta1 * beta1 + beta2 * beta2) + 1.0 / (gamma + beta1 * beta1 / alpha1 + beta2 * beta2 / alpha2);
    let r3 = schur.sqrt();
    let (r1, r2) = ((1.0 + alpha1).sqrt(), (1.0 + alpha2).sqrt());
    // B^{1/2} A B^{1/2} with the leading blocks reduced to 1
    let abs = eigen_arrow(beta1 * r3 / r1, beta2 * r3 / r2, -gamma * schur).map(f64::abs);
    let cond = abs.iter().cloned().fold(0.0, f64::max) / abs.iter().cloned().fold(f64::INFINITY, f64::min);
    if !cond.is_finite() {
        return Err(Error::NonFinite(format!(
            "scalar model condition at ({alpha1:e}, {alpha2:e}, {beta1:e}, {beta2:e}, {gamma:e})"
        )));
    }
    Ok(cond)
}

/// Same quantity through a general dense SVD; slower, kept as a cross-check.
pub fn scalar_model_condition_svd(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64, gamma: f64) -> Result<f64> {
    let (a, b) = scalar_model_matrices(alpha1, alpha2, beta1, beta2, gamma)?;
    let root: Vec<f64> = (0..3).map(|i| b[(i, i)].sqrt()).collect();
    let sym = DenseMatrix::from_fn(3, 3, |i, j| root[i] * a[(i, j)] * root[j]);
    let sv = singular_values(&sym);
    Ok(sv[0] / sv[2])
}

// Eigenvalues of [[1, 0, a], [0, 1, b], [a, b, c]]: 1 (along (b, -a, 0)) and
// those of [[1, r], [r, c]] with r² = a² + b², the smaller taken from the
// determinant to avoid cancellation.
fn eigen_arrow(a: f64, b: f64, c: f64) -> [f64; 3] {
    let r2 = a * a + b * b;
    let half = 0.5 * (1.0 + c);
    let disc = (0.25 * (1.0 - c) * (1.0 - c) + r2).sqrt();
    let big = if half >= 0.0 { half + disc } else { half - disc };
    [1.0, big, (c - r2) / big]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigen;

    #[test]
    fn unit_parameters() {
        let c = scalar_model_condition(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        // oracle: eigenvalues of the symmetric similarity transform
        let (a, b) = scalar_model_matrices(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let r: Vec<f64> = (0..3).map(|i| b[(i, i)].sqrt()).collect();
        let s = DenseMatrix::from_fn(3, 3, |i, j| r[i] * a[(i, j)] * r[j]);
        let e = symmetric_eigen(&s, false).unwrap().eigenvalues;
        let abs: Vec<f64> = e.iter().map(|v| v.abs()).collect();
        let expect = abs.iter().cloned().fold(0.0, f64::max) / abs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((c - expect).abs() < 1e-12 * expect);
        assert!(c.is_finite() && c >= 1.0);
    }

    #[test]
    fn closed_form_matches_svd() {
        let grid: [f64; 5] = [1e-8, 1e-3, 1.0, 1e4, 1e8];
        for &a1 in &grid {
            for &b1 in &grid {
                for &g in &grid {
                    let args = (a1, 1.0 / a1.sqrt(), b1, 1e2, g);
                    let fast = scalar_model_condition(args.0, args.1, args.2, args.3, args.4).unwrap();
                    let svd = scalar_model_condition_svd(args.0, args.1, args.2, args.3, args.4).unwrap();
                    assert!((fast - svd).abs() < 1e-7 * svd, "{args:?}: {fast} vs {svd}");
                }
            }
        }
    }

    #[test]
    fn preconditioner_is_positive() {
        for &p in &[1e-8, 1.0, 1e8] {
            let (_, b) = scalar_model_matrices(p, 1.0 / p, p, 1.0, p).unwrap();
            assert!((0..3).all(|i| b[(i, i)] > 0.0));
        }
        assert!(scalar_model_matrices(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }
}
