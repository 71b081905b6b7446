//! Row-major dense matrices and the direct factorizations built on them.

use std::ops::{Index, IndexMut};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    values: Vec<f64>,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.values[i * self.ncols + j]
    }
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            values: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(nrows: usize, ncols: usize, values: Vec<f64>) -> Result<Self> {
        check_len("dense matrix storage", nrows * ncols, values.len())?;
        Ok(DenseMatrix { nrows, ncols, values })
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                values.push(f(i, j));
            }
        }
        DenseMatrix { nrows, ncols, values }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("dense matvec", self.ncols, x.len())?;
        Ok((0..self.nrows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `A' x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("dense transpose matvec", self.nrows, x.len())?;
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut y);
        }
        Ok(y)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("dense matmul", self.ncols, other.nrows)?;
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a != 0.0 {
                    let (src, dst) = (other.row(k), i);
                    let row = &mut out.values[dst * other.ncols..(dst + 1) * other.ncols];
                    axpy(a, src, row);
                }
            }
        }
        Ok(out)
    }

    pub fn scale_in_place(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `||self - other||_F`.
    pub fn frobenius_distance(&self, other: &DenseMatrix) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn symmetrize(&mut self) {
        assert_eq!(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Lower Cholesky factor `L` with `A = L L'`.
    pub fn cholesky(&self) -> Result<Cholesky> {
        check_len("cholesky (square)", self.nrows, self.ncols)?;
        let n = self.nrows;
        let mut l = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = self[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { index: i, value: s });
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(Cholesky { l })
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<Lu> {
        check_len("lu (square)", self.nrows, self.ncols)?;
        let n = self.nrows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax == 0.0 || !pmax.is_finite() {
                return Err(Error::Singular(k));
            }
            if p != k {
                for j in 0..n {
                    a.values.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[(k, k)];
            let (upper, lower) = a.values.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n + k + 1..k * n + n];
            for i in 0..n - k - 1 {
                let row = &mut lower[i * n..(i + 1) * n];
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor != 0.0 {
                    axpy(-factor, pivot_row, &mut row[k + 1..]);
                }
            }
        }
        Ok(Lu { lu: a, perm })
    }

    /// Solves `A x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.lu()?.solve(b)
    }
}

#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, y: &mut [f64]) {
        let n = self.l.nrows;
        for i in 0..n {
            let s = y[i] - dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `L' x = y` in place.
    pub fn backward_in_place(&self, x: &mut [f64]) {
        let n = self.l.nrows;
        for i in (0..n).rev() {
            x[i] /= self.l[(i, i)];
            let xi = x[i];
            axpy(-xi, &self.l.row(i)[..i], &mut x[..i]);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("cholesky solve", self.dim(), b.len())?;
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        Ok(x)
    }

    /// `L^{-1} B` computed row by row.
    pub fn forward_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let n = self.l.nrows;
        let m = b.ncols;
        let mut y = b.clone();
        for i in 0..n {
            let (done, rest) = y.values.split_at_mut(i * m);
            let row = &mut rest[..m];
            for k in 0..i {
                let lik = self.l[(i, k)];
                if lik != 0.0 {
                    axpy(-lik, &done[k * m..(k + 1) * m], row);
                }
            }
            let d = 1.0 / self.l[(i, i)];
            row.iter_mut().for_each(|v| *v *= d);
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn dim(&self) -> usize {
        self.lu.nrows
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        check_len("lu solve", n, b.len())?;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu.row(i)[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `eigenvalues`.
    pub eigenvectors: Option<DenseMatrix>,
}

/// Symmetric eigensolver: Householder tridiagonalization followed by the
/// implicit QL iteration. Eigenvectors are accumulated only on request.
pub fn symmetric_eigen(a: &DenseMatrix, want_vectors: bool) -> Result<SymmetricEigen> {
    check_len("symmetric eigen (square)", a.nrows, a.ncols)?;
    let n = a.nrows;
    if n == 0 {
        return Ok(SymmetricEigen {
            eigenvalues: vec![],
            eigenvectors: want_vectors.then(|| DenseMatrix::zeros(0, 0)),
        });
    }
    if a.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("symmetric eigen input".into()));
    }
    let mut work = a.clone();
    let (diag, off, taus) = tridiagonalize(&mut work);
    // eigenvectors of the tridiagonal matrix, stored as rows
    let mut zt = want_vectors.then(|| DenseMatrix::identity(n));
    let mut d = diag;
    let mut e = off;
    tridiagonal_ql(&mut d, &mut e, zt.as_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();

    let eigenvectors = zt.map(|mut zt| {
        // back-transform each tridiagonal eigenvector by the Householder reflectors
        for r in 0..n {
            let z = zt.row_mut(r);
            for k in (0..n.saturating_sub(2)).rev() {
                let tau = taus[k];
                if tau == 0.0 {
                    continue;
                }
                let v = &work.values[k * n + k + 1..k * n + n];
                let seg = &mut z[k + 1..];
                let s = tau * (seg[0] + dot(&v[1..], &seg[1..]));
                seg[0] -= s;
                axpy(-s, &v[1..], &mut seg[1..]);
            }
        }
        DenseMatrix::from_fn(n, n, |i, j| zt[(order[j], i)])
    });
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Reduces the symmetric matrix in `a` to tridiagonal form in place.
/// Returns (diagonal, off-diagonal, householder scalars); the Householder
/// vector for step `k` is stored in row `k` to the right of the diagonal
/// with an implicit leading one.
fn tridiagonalize(a: &mut DenseMatrix) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = a.nrows;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut taus = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let (alpha, sigma) = {
            let x = &a.values[k * n + k + 1..k * n + n];
            (x[0], dot(&x[1..], &x[1..]))
        };
        d[k] = a[(k, k)];
        if sigma == 0.0 {
            e[k] = alpha;
            taus[k] = 0.0;
            continue;
        }
        let norm = (alpha * alpha + sigma).sqrt();
        let beta = if alpha <= 0.0 { norm } else { -norm };
        let tau = (beta - alpha) / beta;
        let scale = 1.0 / (alpha - beta);
        {
            let x = &mut a.values[k * n + k + 1..k * n + n];
            x[0] = 1.0;
            x[1..].iter_mut().for_each(|v| *v *= scale);
        }
        e[k] = beta;
        taus[k] = tau;

        // p = tau * A22 v
        let v: Vec<f64> = a.values[k * n + k + 1..k * n + n].to_vec();
        for (i, pi) in p[..m].iter_mut().enumerate() {
            let r = k + 1 + i;
            *pi = tau * dot(&a.values[r * n + k + 1..r * n + n], &v);
        }
        // w = p - (tau/2)(p'v) v
        let kk = 0.5 * tau * dot(&p[..m], &v);
        for i in 0..m {
            p[i] -= kk * v[i];
        }
        // A22 -= v w' + w v'
        for i in 0..m {
            let r = k + 1 + i;
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a.values[r * n + k + 1..r * n + n];
            for j in 0..m {
                row[j] -= vi * p[j] + wi * v[j];
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2, n - 2)];
        e[n - 2] = a[(n - 2, n - 1)];
    }
    d[n - 1] = a[(n - 1, n - 1)];
    e[n - 1] = 0.0;
    (d, e, taus)
}

/// Implicit QL iteration on a symmetric tridiagonal matrix with diagonal `d`
/// and super-diagonal `e` (`e[i]` couples `i` and `i+1`). When `zt` is given,
/// the rotations are accumulated on its rows.
pub(crate) fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut DenseMatrix>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Breakdown("tridiagonal QL iteration did not converge".into()));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = zt.as_deref_mut() {
                        let ncols = z.ncols;
                        let (lo, hi) = z.values.split_at_mut((i + 1) * ncols);
                        let zi = &mut lo[i * ncols..];
                        let zi1 = &mut hi[..ncols];
                        for k in 0..ncols {
                            let hk = zi1[k];
                            zi1[k] = s * zi[k] + c * hk;
                            zi[k] = c * zi[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    // work on columns of A (stored as rows of A')
    let mut w = a.transpose();
    let (ncol, nrow) = (w.nrows, w.ncols);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..ncol {
            for q in p + 1..ncol {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (w.row(p), w.row(q));
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..nrow {
                    let (x, y) = (w[(p, k)], w[(q, k)]);
                    w[(p, k)] = c * x - s * y;
                    w[(q, k)] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..ncol).map(|p| dot(w.row(p), w.row(p)).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.truncate(nrow.min(ncol));
    sv
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let n = a.len().min(b.len());
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for i in 4 * chunks..n {
        s0 += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3)
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
