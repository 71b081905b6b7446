//! Conjugate gradients and preconditioned MinRes.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::dense::{axpy, dot};
use crate::linalg::operator::{IdentityOperator, LinearOperator};

/// Outcome of an iterative solve.
///
/// `residual_history` holds the initial residual norm followed by one entry
/// per iteration, so its length is `iterations + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_residual_norm: f64,
    pub residual_history: Vec<f64>,
}

impl SolverReport {
    fn new(initial: f64) -> Self {
        SolverReport {
            iterations: 0,
            converged: false,
            final_residual_norm: initial,
            residual_history: vec![initial],
        }
    }

    fn record(&mut self, norm: f64) {
        self.iterations += 1;
        self.final_residual_norm = norm;
        self.residual_history.push(norm);
    }
}

/// Conjugate gradients for a symmetric positive definite operator.
///
/// Stops when `||b - A x||_2 <= rtol * ||b||_2`. Running out of iterations is
/// reported through `converged = false`; a non-finite iterate is an error.
pub fn conjugate_gradient(
    a: &dyn LinearOperator,
    b: &[f64],
    rtol: f64,
    maxiter: usize,
) -> Result<(Vec<f64>, SolverReport)> {
    preconditioned_cg(a, &IdentityOperator(a.dim()), b, None, rtol, maxiter)
}

/// Preconditioned CG with an optional initial guess. The stopping test is
/// always on the unpreconditioned 2-norm residual.
pub fn preconditioned_cg(
    a: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    rtol: f64,
    maxiter: usize,
) -> Result<(Vec<f64>, SolverReport)> {
    let n = a.dim();
    check_len("cg right-hand side", n, b.len())?;
    if !(rtol > 0.0) {
        return Err(Error::InvalidParameter(format!("cg tolerance must be positive, got {rtol}")));
    }
    let bnorm = dot(b, b).sqrt();
    let mut x = match x0 {
        Some(x0) => {
            check_len("cg initial guess", n, x0.len())?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut r = b.to_vec();
    let mut ap = vec![0.0; n];
    if x0.is_some() {
        a.apply(&x, &mut ap)?;
        axpy(-1.0, &ap, &mut r);
    }
    let mut rnorm = dot(&r, &r).sqrt();
    let mut report = SolverReport::new(rnorm);
    let target = rtol * bnorm;
    if rnorm <= target || bnorm == 0.0 {
        report.converged = true;
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
        }
        return Ok((x, report));
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..maxiter {
        a.apply(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(Error::NonFinite("conjugate gradient iterate".into()));
        }
        if pap <= 0.0 {
            return Err(Error::Breakdown(format!(
                "operator is not positive definite (p'Ap = {pap:e})"
            )));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        rnorm = dot(&r, &r).sqrt();
        if !rnorm.is_finite() {
            return Err(Error::NonFinite("conjugate gradient residual".into()));
        }
        report.record(rnorm);
        if rnorm <= target {
            report.converged = true;
            return Ok((x, report));
        }
        precond.apply(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok((x, report))
}

/// Preconditioned MinRes for a symmetric (possibly indefinite) operator with
/// a symmetric positive definite preconditioner `precond`.
///
/// The residual is measured in the preconditioner norm `sqrt(r' B r)` and
/// iterations stop once it drops below `atol`. The recorded history is the
/// recurrence estimate of that norm and is nonincreasing.
pub fn minres(
    op: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    b: &[f64],
    atol: f64,
    maxiter: usize,
) -> Result<(Vec<f64>, SolverReport)> {
    let n = op.dim();
    check_len("minres right-hand side", n, b.len())?;
    check_len("minres preconditioner", n, precond.dim())?;
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y = vec![0.0; n];
    precond.apply(&r1, &mut y)?;
    let b1sq = dot(&r1, &y);
    if b1sq < 0.0 {
        return Err(Error::Breakdown("preconditioner is not positive definite".into()));
    }
    let beta1 = b1sq.sqrt();
    let mut report = SolverReport::new(beta1);
    if beta1 < atol {
        report.converged = true;
        return Ok((x, report));
    }
    let mut r2 = r1.clone();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];

    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;

    for itn in 1..=maxiter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        op.apply(&v, &mut y)?;
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        precond.apply(&r2, &mut y)?;
        oldb = beta;
        let bsq = dot(&r2, &y);
        if bsq < 0.0 {
            return Err(Error::Breakdown("preconditioner is not positive definite".into()));
        }
        beta = bsq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        }
        axpy(phi, &w, &mut x);

        if !phibar.is_finite() || !phi.is_finite() {
            return Err(Error::NonFinite("minres recurrence".into()));
        }
        report.record(phibar);
        if phibar < atol {
            report.converged = true;
            return Ok((x, report));
        }
        if beta <= f64::EPSILON * beta1 * 1e-6 {
            return Err(Error::Breakdown(format!(
                "Lanczos process terminated with residual {phibar:e} above tolerance {atol:e}"
            )));
        }
    }
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DiagonalOperator, SparseMatrix};

    fn laplace_plus_mass_1d(n: usize) -> SparseMatrix {
        let h = 1.0 / (n - 1) as f64;
        let mut t = Vec::new();
        for e in 0..n - 1 {
            let (i, j) = (e, e + 1);
            for (a, b, s, m) in [(i, i, 1.0, 2.0), (j, j, 1.0, 2.0), (i, j, -1.0, 1.0), (j, i, -1.0, 1.0)] {
                t.push((a, b, s / h + m * h / 6.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn cg_identity_one_iteration() {
        let a = SparseMatrix::identity(4);
        let b = [1.0, -2.0, 3.0, 0.5];
        let (x, rep) = conjugate_gradient(&a, &b, 1e-12, 10).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert_eq!(x, b.to_vec());
    }

    #[test]
    fn cg_diagonal_inverse() {
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let (x, rep) = conjugate_gradient(&a, &[1.0; 5], 1e-14, 20).unwrap();
        assert!(rep.converged);
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - 1.0 / (i + 1) as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn cg_manufactured_ones() {
        let a = laplace_plus_mass_1d(10);
        let b = a.spmv(&[1.0; 10]).unwrap();
        let (x, rep) = conjugate_gradient(&a, &b, 1e-12, 100).unwrap();
        assert!(rep.converged);
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert_eq!(rep.residual_history.len(), rep.iterations + 1);
    }

    #[test]
    fn cg_reports_nonconvergence() {
        let a = laplace_plus_mass_1d(50);
        let b = vec![1.0; 50];
        let (_, rep) = conjugate_gradient(&a, &b, 1e-14, 2).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn cg_rejects_nan() {
        let a = SparseMatrix::from_diagonal(&[1.0, f64::NAN]);
        assert!(conjugate_gradient(&a, &[1.0, 1.0], 1e-10, 5).is_err());
    }

    #[test]
    fn minres_identity() {
        let a = SparseMatrix::identity(3);
        let b = [3.0, -1.0, 2.0];
        let (x, rep) = minres(&a, &IdentityOperator(3), &b, 1e-12, 10).unwrap();
        assert_eq!(rep.iterations, 1);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn minres_indefinite_diagonal() {
        let a = SparseMatrix::from_diagonal(&[1.0, -1.0, 2.0]);
        let (x, rep) = minres(&a, &IdentityOperator(3), &[1.0, 1.0, 2.0], 1e-12, 10).unwrap();
        assert!(rep.converged);
        for (xi, ti) in x.iter().zip(&[1.0, -1.0, 1.0]) {
            assert!((xi - ti).abs() < 1e-12);
        }
        assert!(rep.residual_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn minres_matches_cg_on_spd() {
        let a = laplace_plus_mass_1d(30);
        let b: Vec<f64> = (0..30).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let (xc, _) = conjugate_gradient(&a, &b, 1e-12, 500).unwrap();
        let jac = DiagonalOperator::jacobi(&a);
        let (xm, rep) = minres(&a, &jac, &b, 1e-13, 500).unwrap();
        assert!(rep.converged);
        let scale = xc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (p, q) in xc.iter().zip(&xm) {
            assert!((p - q).abs() <= 1e-9 * scale);
        }
    }
}
