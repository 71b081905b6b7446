//! Lanczos estimates of extreme eigenvalues of symmetric pencils.
//!
//! Every routine runs the same recurrence on an operator `T` that is
//! self-adjoint in the inner product of an SPD matrix `G`. Basis vectors are
//! kept together with their `G`-images so that full reorthogonalization never
//! needs `G` itself when the caller can supply `G T v` cheaply.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::dense::{axpy, dot, tridiagonal_ql};
use crate::linalg::{DenseMatrix, LinearOperator};

const START_SEED: u64 = 0x5eed_1a2c;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Target {
    Largest,
    Both,
}

#[derive(Debug, Clone, Copy)]
struct Estimates {
    min_abs: f64,
    max_abs: f64,
    converged: bool,
}

/// Runs the recurrence from the start pair `(v, G v)` (not yet normalized).
/// `step(v, gv, t, gt)` writes `T v` into `t` and `G T v` into `gt`.
fn lanczos<F>(start: (Vec<f64>, Vec<f64>), max_steps: usize, tol: f64, target: Target, mut step: F) -> Result<Estimates>
where
    F: FnMut(&[f64], &[f64], &mut [f64], &mut [f64]) -> Result<()>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("lanczos tolerance must be positive, got {tol}")));
    }
    let (mut v, mut gv) = start;
    let n = v.len();
    let norm = dot(&v, &gv).sqrt();
    if !(norm > 0.0) {
        return Err(Error::Breakdown("start vector has zero norm in the pencil inner product".into()));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    gv.iter_mut().for_each(|x| *x /= norm);

    let max_steps = max_steps.min(n).max(1);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut gbasis: Vec<Vec<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut t = vec![0.0; n];
    let mut gt = vec![0.0; n];
    let mut best = Estimates { min_abs: f64::NAN, max_abs: f64::NAN, converged: false };

    for j in 0..max_steps {
        step(&v, &gv, &mut t, &mut gt)?;
        let alpha = dot(&gv, &t);
        basis.push(std::mem::take(&mut v));
        gbasis.push(std::mem::take(&mut gv));
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for (q, gq) in basis.iter().zip(&gbasis) {
                let c = dot(gq, &t);
                axpy(-c, q, &mut t);
                axpy(-c, gq, &mut gt);
            }
        }
        let bsq = dot(&t, &gt);
        if !bsq.is_finite() {
            return Err(Error::NonFinite("lanczos recurrence".into()));
        }
        let beta = bsq.max(0.0).sqrt();

        let (ritz, last) = ritz_values(&alphas, &betas)?;
        let resid: Vec<f64> = last.iter().map(|l| (beta * l).abs()).collect();
        let imax = (0..ritz.len()).max_by(|&a, &b| ritz[a].abs().total_cmp(&ritz[b].abs())).unwrap();
        let imin = (0..ritz.len()).min_by(|&a, &b| ritz[a].abs().total_cmp(&ritz[b].abs())).unwrap();
        best.max_abs = ritz[imax].abs();
        best.min_abs = ritz[imin].abs();
        let max_ok = resid[imax] <= tol * best.max_abs;
        let min_ok = resid[imin] <= tol * best.min_abs;
        best.converged = match target {
            Target::Largest => max_ok,
            Target::Both => max_ok && min_ok,
        };
        // an invariant subspace has been found: the Ritz values are exact
        let invariant = beta <= 1e-13 * best.max_abs;
        if invariant {
            best.converged = true;
        }
        if best.converged || j + 1 == max_steps {
            return Ok(best);
        }
        v = t.iter().map(|x| x / beta).collect();
        gv = gt.iter().map(|x| x / beta).collect();
        betas.push(beta);
    }
    Ok(best)
}

fn random_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Eigenvalues of the tridiagonal matrix and the last component of each
/// normalized eigenvector.
fn ritz_values(alphas: &[f64], betas: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = alphas.len();
    let mut d = alphas.to_vec();
    let mut e = vec![0.0; m];
    e[..m - 1].copy_from_slice(&betas[..m - 1]);
    let mut zt = DenseMatrix::identity(m);
    tridiagonal_ql(&mut d, &mut e, Some(&mut zt))?;
    let last = (0..m).map(|r| zt[(r, m - 1)]).collect();
    Ok((d, last))
}

fn check_square(op: &dyn LinearOperator, other: &dyn LinearOperator) -> Result<usize> {
    check_len("lanczos operator sizes", op.dim(), other.dim())?;
    Ok(op.dim())
}

/// Smallest and largest `|λ|` of the pencil `op x = λ binv⁻¹ x`, where
/// `binv` is symmetric positive definite, from at most `n` Lanczos steps.
///
/// Returns `Error::EigenNotConverged` with the best estimates when either
/// end has not reached relative accuracy `tol`.
pub fn extreme_eigenvalues(op: &dyn LinearOperator, binv: &dyn LinearOperator, n: usize, tol: f64) -> Result<(f64, f64)> {
    let est = preconditioned(op, binv, n, tol, Target::Both)?;
    if est.converged {
        Ok((est.min_abs, est.max_abs))
    } else {
        Err(Error::EigenNotConverged { min: est.min_abs, max: est.max_abs })
    }
}

/// Largest `|λ|` of `op x = λ binv⁻¹ x`.
pub fn largest_magnitude_eigenvalue(op: &dyn LinearOperator, binv: &dyn LinearOperator, max_steps: usize, tol: f64) -> Result<f64> {
    let est = preconditioned(op, binv, max_steps, tol, Target::Largest)?;
    if est.converged {
        Ok(est.max_abs)
    } else {
        Err(Error::EigenNotConverged { min: est.min_abs, max: est.max_abs })
    }
}

// G = binv⁻¹ is never formed: vectors are generated in the dual space, where
// `G v` is the residual-like quantity and `v = binv (G v)`.
fn preconditioned(op: &dyn LinearOperator, binv: &dyn LinearOperator, steps: usize, tol: f64, target: Target) -> Result<Estimates> {
    let dim = check_square(op, binv)?;
    let g0 = random_vector(dim);
    let v0 = binv.apply_vec(&g0)?;
    lanczos((v0, g0), steps, tol, target, |v, _gv, t, gt| {
        op.apply(v, gt)?;
        binv.apply(gt, t)
    })
}

/// Smallest `|λ|` of `op x = λ mass x`, given `solve ≈ op⁻¹` and the SPD
/// matrix `mass`. Runs Lanczos on `op⁻¹ mass`, whose dominant eigenvalues
/// are the reciprocals of the ones sought.
pub fn smallest_magnitude_eigenvalue(solve: &dyn LinearOperator, mass: &dyn LinearOperator, max_steps: usize, tol: f64) -> Result<f64> {
    let dim = check_square(solve, mass)?;
    let v0 = random_vector(dim);
    let g0 = mass.apply_vec(&v0)?;
    let est = lanczos((v0, g0), max_steps, tol, Target::Largest, |_v, gv, t, gt| {
        solve.apply(gv, t)?;
        mass.apply(t, gt)
    })?;
    if est.converged && est.max_abs > 0.0 {
        Ok(1.0 / est.max_abs)
    } else {
        Err(Error::EigenNotConverged { min: 1.0 / est.max_abs, max: f64::NAN })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{IdentityOperator, SparseMatrix};

    #[test]
    fn diagonal_extremes() {
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let (lo, hi) = extreme_eigenvalues(&a, &IdentityOperator(3), 3, 1e-10).unwrap();
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn saddle_golden_ratio() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let (lo, hi) = extreme_eigenvalues(&a, &IdentityOperator(2), 2, 1e-10).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((hi - phi).abs() < 1e-12);
        assert!((lo - (phi - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn generalized_pencil_with_diagonal_mass() {
        // op x = λ diag(2, 4, 8) x with op = diag(2, -8, 4) has λ = 1, -2, 0.5
        let op = SparseMatrix::from_diagonal(&[2.0, -8.0, 4.0]);
        let binv = SparseMatrix::from_diagonal(&[0.5, 0.25, 0.125]);
        let (lo, hi) = extreme_eigenvalues(&op, &binv, 3, 1e-10).unwrap();
        assert!((lo - 0.5).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
        let mass = SparseMatrix::from_diagonal(&[2.0, 4.0, 8.0]);
        let inv = SparseMatrix::from_diagonal(&[0.5, -0.125, 0.25]);
        let small = smallest_magnitude_eigenvalue(&inv, &mass, 3, 1e-10).unwrap();
        assert!((small - 0.5).abs() < 1e-12);
    }

    #[test]
    fn large_spectrum_converges_at_the_ends() {
        let n = 400;
        let d: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
        let a = SparseMatrix::from_diagonal(&d);
        let hi = largest_magnitude_eigenvalue(&a, &IdentityOperator(n), 200, 1e-8).unwrap();
        assert!((hi - d[n - 1]).abs() < 1e-6);
    }
}
