//! Dense real linear algebra used by every other module.
//!
//! Everything here is written for small, dense problems (dimensions in the
//! tens): LU solves with partial pivoting, one-sided Jacobi SVD, Cholesky,
//! the discrete Lyapunov equation via vectorization, and closed-form
//! exponentials/eigendecompositions for 2x2 blocks. Complex arithmetic is
//! confined to the 2x2 block routines; no general complex matrix stack
//! exists.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },
    #[error("SVD did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix is not positive definite: pivot {pivot:.3e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not Schur ({0})")]
    NotSchur(&'static str),
    #[error("2x2 block is defective: repeated eigenvalue with geometric multiplicity 1")]
    DefectiveBlock,
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must be rows*cols");
        debug_assert!(data.iter().all(|v| v.is_finite()), "entries must be finite");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Column vector from a slice.
    pub fn col_vec(v: &[f64]) -> Self {
        Matrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in mul");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = out.row_mut(i);
                for j in 0..rhs.cols {
                    orow[j] += a * rrow[j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in mul_vec");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self' * v` without forming the transpose.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "dimension mismatch in tr_mul_vec");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += row[j] * vi;
            }
        }
        out
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let data = self.data.iter().map(|a| a * s).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn pow(&self, k: usize) -> Matrix {
        assert_eq!(self.rows, self.cols);
        let mut out = Matrix::identity(self.rows);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn symmetrized(&self) -> Matrix {
        self.add(&self.transpose()).scale(0.5)
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, blk: &Matrix) {
        assert!(r0 + blk.rows <= self.rows && c0 + blk.cols <= self.cols);
        for i in 0..blk.rows {
            for j in 0..blk.cols {
                self[(r0 + i, c0 + j)] = blk[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        out
    }

    pub fn columns(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            for (jo, &j) in idx.iter().enumerate() {
                out[(i, jo)] = self[(i, j)];
            }
        }
        out
    }

    pub fn hstack(parts: &[&Matrix]) -> Matrix {
        assert!(!parts.is_empty());
        let rows = parts[0].rows;
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut c0 = 0;
        for p in parts {
            assert_eq!(p.rows, rows);
            out.set_block(0, c0, p);
            c0 += p.cols;
        }
        out
    }

    pub fn vstack(parts: &[&Matrix]) -> Matrix {
        assert!(!parts.is_empty());
        let cols = parts[0].cols;
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut r0 = 0;
        for p in parts {
            assert_eq!(p.cols, cols);
            out.set_block(r0, 0, p);
            r0 += p.rows;
        }
        out
    }

    pub fn block_diag(parts: &[&Matrix]) -> Matrix {
        let rows = parts.iter().map(|p| p.rows).sum();
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for p in parts {
            out.set_block(r0, c0, p);
            r0 += p.rows;
            c0 += p.cols;
        }
        out
    }

    /// Kronecker product, consistent with column-major vectorization:
    /// `vec(A X B) = (B' ⊗ A) vec(X)`.
    pub fn kron(&self, rhs: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows * rhs.rows, self.cols * rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out[(i * rhs.rows + k, j * rhs.cols + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Column-major vectorization.
    pub fn vec_col(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn from_vec_col(rows: usize, cols: usize, v: &[f64]) -> Matrix {
        assert_eq!(v.len(), rows * cols);
        let mut out = Matrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                out[(i, j)] = v[j * rows + i];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x' M x` for square symmetric `M`.
pub fn quad_form(x: &[f64], m: &Matrix) -> f64 {
    dot(x, &m.mul_vec(x))
}

/// Solve `A X = b` by LU with partial pivoting; `b` may have several columns.
///
/// Errors with [`LinalgError::SingularMatrix`] when a pivot magnitude falls
/// below `1e-12` times the largest entry of `A`.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    assert_eq!(a.rows(), a.cols(), "solve_linear needs a square matrix");
    assert_eq!(a.rows(), b.rows(), "rhs row count mismatch");
    let n = a.rows();
    let threshold = 1e-12 * a.max_abs().max(f64::MIN_POSITIVE);
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        // partial pivot: largest magnitude in column k at or below the diagonal
        let mut piv = k;
        let mut pmax = lu[(k, k)].abs();
        for i in (k + 1)..n {
            let v = lu[(i, k)].abs();
            if v > pmax {
                pmax = v;
                piv = i;
            }
        }
        if pmax < threshold {
            return Err(LinalgError::SingularMatrix { pivot: pmax, threshold });
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            for j in 0..x.cols() {
                let t = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        let d = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / d;
            if f == 0.0 {
                continue;
            }
            lu[(i, k)] = 0.0;
            for j in (k + 1)..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
            for j in 0..x.cols() {
                x[(i, j)] -= f * x[(k, j)];
            }
        }
    }
    // back substitution
    for j in 0..x.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in (i + 1)..n {
                s -= lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

/// Singular value decomposition by one-sided Jacobi iteration.
///
/// Returns `(U, sigma, V)` with `M = U * diag(sigma) * V'` and `sigma`
/// non-negative descending. Off-diagonal tolerance `1e-12`; errors with
/// [`LinalgError::NoConvergence`] after 100 sweeps.
pub fn svd(m: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix), LinalgError> {
    if m.rows() < m.cols() {
        let (u, s, v) = svd(&m.transpose())?;
        return Ok((v, s, u));
    }
    let (rows, cols) = (m.rows(), m.cols());
    // columns of `a` are rotated in place; v accumulates the rotations
    let mut a = m.clone();
    let mut v = Matrix::identity(cols);
    let tol = 1e-12;
    let mut converged = false;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let mut aii = 0.0;
                let mut ajj = 0.0;
                let mut aij = 0.0;
                for r in 0..rows {
                    let x = a[(r, i)];
                    let y = a[(r, j)];
                    aii += x * x;
                    ajj += y * y;
                    aij += x * y;
                }
                let denom = (aii * ajj).sqrt();
                if denom <= f64::MIN_POSITIVE || aij.abs() <= tol * denom {
                    continue;
                }
                off = off.max(aij.abs() / denom);
                let zeta = (ajj - aii) / (2.0 * aij);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..rows {
                    let x = a[(r, i)];
                    let y = a[(r, j)];
                    a[(r, i)] = cs * x - sn * y;
                    a[(r, j)] = sn * x + cs * y;
                }
                for r in 0..cols {
                    let x = v[(r, i)];
                    let y = v[(r, j)];
                    v[(r, i)] = cs * x - sn * y;
                    v[(r, j)] = sn * x + cs * y;
                }
            }
        }
        if off <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence(100));
    }
    let mut sigma: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|r| a[(r, j)] * a[(r, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let mut u = Matrix::zeros(rows, cols);
    let mut vs = Matrix::zeros(cols, cols);
    let sorted: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    for (jo, &j) in order.iter().enumerate() {
        let s = sigma[j];
        if s > 0.0 {
            for r in 0..rows {
                u[(r, jo)] = a[(r, j)] / s;
            }
        } else {
            u[(jo.min(rows - 1), jo)] = 1.0;
        }
        for r in 0..cols {
            vs[(r, jo)] = v[(r, j)];
        }
    }
    sigma = sorted;
    Ok((u, sigma, vs))
}

/// Number of singular values above `tol` times the largest one.
pub fn rank(m: &Matrix, tol: f64) -> Result<usize, LinalgError> {
    assert!(tol > 0.0);
    let (_, sigma, _) = svd(m)?;
    let smax = sigma.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sigma.iter().filter(|&&s| s > tol * smax).count())
}

/// Rank of a complex matrix `Re + i Im` via the real embedding
/// `[[Re, -Im], [Im, Re]]`, whose real rank is twice the complex rank.
pub fn rank_complex(re: &Matrix, im: &Matrix, tol: f64) -> Result<usize, LinalgError> {
    assert_eq!((re.rows(), re.cols()), (im.rows(), im.cols()));
    let neg_im = im.scale(-1.0);
    let top = Matrix::hstack(&[re, &neg_im]);
    let bot = Matrix::hstack(&[im, re]);
    let emb = Matrix::vstack(&[&top, &bot]);
    Ok(rank(&emb, tol)? / 2)
}

/// Lower-triangular Cholesky factor `L` with `L L' = M`.
///
/// Errors when a diagonal pivot drops to `1e-12 * trace(M)/dim` or below;
/// this is the positive-definiteness certificate used throughout synthesis.
pub fn cholesky(m: &Matrix) -> Result<Matrix, LinalgError> {
    assert!(m.is_symmetric(1e-10), "cholesky needs a symmetric matrix");
    let n = m.rows();
    let threshold = 1e-12 * m.trace().abs().max(f64::MIN_POSITIVE) / n as f64;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= threshold {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Solve `M x = b` given the Cholesky factor `L` of `M`.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Solve the discrete Lyapunov equation `Acl' P Acl - P + Q = 0` for `P`.
///
/// Works through the vectorized system `(I - Acl'⊗Acl') vec(P) = vec(Q)` and
/// certifies `P ≻ 0` by Cholesky. With `Q ≻ 0` that certificate doubles as
/// the Schur test for `Acl`: both failure modes report
/// [`LinalgError::NotSchur`].
pub fn dlyap(acl: &Matrix, q: &Matrix) -> Result<Matrix, LinalgError> {
    assert_eq!(acl.rows(), acl.cols());
    assert_eq!(q.rows(), q.cols());
    assert_eq!(acl.rows(), q.rows());
    assert!(q.is_symmetric(1e-10), "Q must be symmetric");
    let n = acl.rows();
    let at = acl.transpose();
    let sys = Matrix::identity(n * n).sub(&at.kron(&at));
    let rhs = Matrix::col_vec(&q.vec_col());
    let sol = solve_linear(&sys, &rhs).map_err(|_| LinalgError::NotSchur("vectorized Lyapunov system is singular"))?;
    let p = Matrix::from_vec_col(n, n, sol.data()).symmetrized();
    cholesky(&p).map_err(|_| LinalgError::NotSchur("Lyapunov solution is not positive definite"))?;
    Ok(p)
}

/// Matrix exponential of `mc * dt` for a 2x2 block, by the Cayley-Hamilton
/// closed form: split off the mean-trace scalar part, then use the trig or
/// hyperbolic branch depending on the sign of the trace-free determinant.
pub fn expm2(mc: &Matrix, dt: f64) -> Matrix {
    assert_eq!((mc.rows(), mc.cols()), (2, 2));
    let m = mc.scale(dt);
    let mu = m.trace() / 2.0;
    let n = m.sub(&Matrix::identity(2).scale(mu));
    // n is trace-free, so n^2 = -det(n) I
    let det = n[(0, 0)] * n[(1, 1)] - n[(0, 1)] * n[(1, 0)];
    let (c0, c1) = if det > 1e-12 {
        let s = det.sqrt();
        (s.cos(), s.sin() / s)
    } else if det < -1e-12 {
        let s = (-det).sqrt();
        (s.cosh(), s.sinh() / s)
    } else {
        // series in det; accurate for |det| <= 1e-12
        (1.0 - det / 2.0 + det * det / 24.0, 1.0 - det / 6.0 + det * det / 120.0)
    };
    let em = mu.exp();
    Matrix::identity(2).scale(em * c0).add(&n.scale(em * c1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPair {
    pub re: f64,
    pub im: f64,
}

impl ComplexPair {
    pub fn new(re: f64, im: f64) -> Self {
        ComplexPair { re, im }
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(&self) -> Self {
        ComplexPair { re: self.re, im: -self.im }
    }

    pub fn mul(&self, o: &ComplexPair) -> ComplexPair {
        ComplexPair {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    pub fn sub(&self, o: &ComplexPair) -> ComplexPair {
        ComplexPair { re: self.re - o.re, im: self.im - o.im }
    }
}

/// Eigendecomposition of a real 2x2 matrix.
///
/// `vectors[j]` is the eigenvector for `values[j]`; complex eigenvalues are
/// returned as a conjugate pair with conjugate eigenvectors, normalized to
/// unit Euclidean norm.
#[derive(Debug, Clone)]
pub struct Eig2 {
    pub values: [ComplexPair; 2],
    pub vectors: [[ComplexPair; 2]; 2],
}

/// Eigenvalues of a 2x2 by the quadratic formula; errors with
/// [`LinalgError::DefectiveBlock`] when the eigenvalue is repeated and the
/// geometric multiplicity is 1.
pub fn eig2(m: &Matrix) -> Result<Eig2, LinalgError> {
    assert_eq!((m.rows(), m.cols()), (2, 2));
    let tr = m.trace();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = tr * tr - 4.0 * det;
    let disc_tol = 1e-12 * (tr * tr + 4.0 * det.abs()).max(f64::MIN_POSITIVE);
    if disc > disc_tol {
        let s = disc.sqrt();
        let l1 = (tr + s) / 2.0;
        let l2 = (tr - s) / 2.0;
        let v1 = real_eigvec(m, l1);
        let v2 = real_eigvec(m, l2);
        Ok(Eig2 {
            values: [ComplexPair::new(l1, 0.0), ComplexPair::new(l2, 0.0)],
            vectors: [v1, v2],
        })
    } else if disc < -disc_tol {
        let s = (-disc).sqrt() / 2.0;
        let lam = ComplexPair::new(tr / 2.0, s);
        let v = complex_eigvec(m, lam);
        let vbar = [v[0].conj(), v[1].conj()];
        Ok(Eig2 { values: [lam, lam.conj()], vectors: [v, vbar] })
    } else {
        // repeated real eigenvalue; diagonalizable only if m is lam*I
        let lam = tr / 2.0;
        let scale = m.max_abs().max(1.0);
        let off = m[(0, 1)].abs().max(m[(1, 0)].abs());
        let diag_gap = (m[(0, 0)] - lam).abs().max((m[(1, 1)] - lam).abs());
        if off > 1e-10 * scale || diag_gap > 1e-10 * scale {
            return Err(LinalgError::DefectiveBlock);
        }
        Ok(Eig2 {
            values: [ComplexPair::new(lam, 0.0); 2],
            vectors: [
                [ComplexPair::new(1.0, 0.0), ComplexPair::new(0.0, 0.0)],
                [ComplexPair::new(0.0, 0.0), ComplexPair::new(1.0, 0.0)],
            ],
        })
    }
}

fn real_eigvec(m: &Matrix, lam: f64) -> [ComplexPair; 2] {
    // (m - lam I) v = 0: pick the better-conditioned row
    let (a, b) = if m[(0, 1)].abs() >= m[(1, 0)].abs() {
        (m[(0, 1)], lam - m[(0, 0)])
    } else {
        (lam - m[(1, 1)], m[(1, 0)])
    };
    let norm = a.hypot(b);
    if norm == 0.0 {
        return [ComplexPair::new(1.0, 0.0), ComplexPair::new(0.0, 0.0)];
    }
    [ComplexPair::new(a / norm, 0.0), ComplexPair::new(b / norm, 0.0)]
}

fn complex_eigvec(m: &Matrix, lam: ComplexPair) -> [ComplexPair; 2] {
    let (v1, v2) = if m[(0, 1)].abs() >= m[(1, 0)].abs() {
        (
            ComplexPair::new(m[(0, 1)], 0.0),
            ComplexPair::new(lam.re - m[(0, 0)], lam.im),
        )
    } else {
        (
            ComplexPair::new(lam.re - m[(1, 1)], lam.im),
            ComplexPair::new(m[(1, 0)], 0.0),
        )
    };
    let norm = (v1.abs().powi(2) + v2.abs().powi(2)).sqrt();
    [
        ComplexPair::new(v1.re / norm, v1.im / norm),
        ComplexPair::new(v2.re / norm, v2.im / norm),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn rng_matrix(rows: usize, cols: usize, state: &mut u64) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            // xorshift64*, mapped to [-1, 1)
            *state ^= *state << 13;
            *state ^= *state >> 7;
            *state ^= *state << 17;
            let u = (*state >> 11) as f64 / (1u64 << 53) as f64;
            data.push(2.0 * u - 1.0);
        }
        Matrix::from_vec(rows, cols, data)
    }

    #[test]
    fn solve_identity() {
        let a = Matrix::identity(3);
        let b = Matrix::col_vec(&[1.0, 2.0, 3.0]);
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x.data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn solve_diagonal() {
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let b = Matrix::col_vec(&[2.0, 8.0]);
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x.data(), &[1.0, 2.0]);
    }

    #[test]
    fn solve_random_residual() {
        let mut state = 42u64;
        for _ in 0..20 {
            let mut a = rng_matrix(10, 10, &mut state);
            for i in 0..10 {
                a[(i, i)] += 5.0; // keep it well conditioned
            }
            let b = rng_matrix(10, 1, &mut state);
            let x = solve_linear(&a, &b).unwrap();
            let res = a.mul(&x).sub(&b);
            let bound = 1e-10 * (1.0 + b.max_abs());
            assert!(res.max_abs() <= bound, "residual {}", res.max_abs());
        }
    }

    #[test]
    fn solve_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let b = Matrix::col_vec(&[1.0, 2.0]);
        assert!(matches!(solve_linear(&a, &b), Err(LinalgError::SingularMatrix { .. })));
    }

    #[test]
    fn svd_diagonal() {
        let m = Matrix::from_diag(&[3.0, 1.0]);
        let (_, s, _) = svd(&m).unwrap();
        assert_close(s[0], 3.0, 1e-12);
        assert_close(s[1], 1.0, 1e-12);
    }

    #[test]
    fn svd_zero() {
        let m = Matrix::zeros(2, 3);
        let (_, s, _) = svd(&m).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
    }

    #[test]
    fn svd_orthogonal_has_unit_singular_values() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let (_, s, _) = svd(&m).unwrap();
        assert_close(s[0], 1.0, 1e-12);
        assert_close(s[1], 1.0, 1e-12);
    }

    #[test]
    fn svd_reconstruction_random() {
        let mut state = 7u64;
        for trial in 0..1000 {
            let rows = 1 + (trial % 20);
            let cols = 1 + ((trial / 3) % 20);
            let m = rng_matrix(rows, cols, &mut state);
            let (u, s, v) = svd(&m).unwrap();
            let rec = u.mul(&Matrix::from_diag(&s)).mul(&v.transpose());
            let err = rec.sub(&m).norm_fro();
            assert!(
                err <= 1e-9 * m.norm_fro().max(1.0),
                "trial {trial} ({rows}x{cols}): err {err}"
            );
        }
    }

    #[test]
    fn rank_cases() {
        assert_eq!(rank(&Matrix::identity(4), 1e-9).unwrap(), 4);
        let dep = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(rank(&dep, 1e-9).unwrap(), 1);
    }

    #[test]
    fn rank_complex_embedding() {
        // i * I(2) has complex rank 2
        let re = Matrix::zeros(2, 2);
        let im = Matrix::identity(2);
        assert_eq!(rank_complex(&re, &im, 1e-9).unwrap(), 2);
    }

    #[test]
    fn cholesky_identity() {
        let l = cholesky(&Matrix::identity(3)).unwrap();
        assert_eq!(l, Matrix::identity(3));
    }

    #[test]
    fn cholesky_hand_case() {
        let m = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]);
        let l = cholesky(&m).unwrap();
        assert_close(l[(0, 0)], 2.0, 1e-12);
        assert_close(l[(1, 0)], 1.0, 1e-12);
        assert_close(l[(1, 1)], 2.0, 1e-12);
        assert_close(l[(0, 1)], 0.0, 1e-12);
    }

    #[test]
    fn cholesky_indefinite() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(cholesky(&m), Err(LinalgError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn cholesky_solve_roundtrip() {
        let m = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]);
        let l = cholesky(&m).unwrap();
        let x = cholesky_solve(&l, &[8.0, 9.0]);
        let back = m.mul_vec(&x);
        assert_close(back[0], 8.0, 1e-12);
        assert_close(back[1], 9.0, 1e-12);
    }

    #[test]
    fn dlyap_zero_dynamics() {
        let p = dlyap(&Matrix::zeros(3, 3), &Matrix::identity(3)).unwrap();
        assert!(p.sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn dlyap_scalar_closed_form() {
        let p = dlyap(
            &Matrix::from_vec(1, 1, vec![0.5]),
            &Matrix::from_vec(1, 1, vec![1.0]),
        )
        .unwrap();
        assert_close(p[(0, 0)], 4.0 / 3.0, 1e-12);
    }

    #[test]
    fn dlyap_rejects_unstable() {
        let a = Matrix::from_diag(&[1.5, 0.5]);
        assert!(matches!(dlyap(&a, &Matrix::identity(2)), Err(LinalgError::NotSchur(_))));
    }

    #[test]
    fn dlyap_residual_random_schur() {
        let mut state = 11u64;
        for _ in 0..50 {
            let a = rng_matrix(4, 4, &mut state).scale(0.2);
            let q = Matrix::identity(4);
            let p = dlyap(&a, &q).unwrap();
            let res = a.transpose().mul(&p).mul(&a).sub(&p).add(&q);
            assert!(res.norm_fro() <= 1e-8 * q.norm_fro());
        }
    }

    #[test]
    fn expm2_zero() {
        let e = expm2(&Matrix::zeros(2, 2), 1.0);
        assert!(e.sub(&Matrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn expm2_rotation_generator() {
        let w = 0.3;
        let gen = Matrix::from_rows(&[vec![0.0, w], vec![-w, 0.0]]);
        let dt = 2.0;
        let e = expm2(&gen, dt);
        let th = w * dt;
        assert_close(e[(0, 0)], th.cos(), 1e-14);
        assert_close(e[(0, 1)], th.sin(), 1e-14);
        assert_close(e[(1, 0)], -th.sin(), 1e-14);
        assert_close(e[(1, 1)], th.cos(), 1e-14);
    }

    #[test]
    fn expm2_semigroup_random() {
        let mut state = 23u64;
        for _ in 0..200 {
            let g = rng_matrix(2, 2, &mut state);
            let ea = expm2(&g, 0.7);
            let eb = expm2(&g, 0.4);
            let eab = expm2(&g, 1.1);
            assert!(ea.mul(&eb).sub(&eab).max_abs() <= 1e-10 * eab.max_abs().max(1.0));
        }
    }

    #[test]
    fn eig2_rotation_spectrum() {
        let th = 0.4f64;
        let r = Matrix::from_rows(&[vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]]);
        let e = eig2(&r).unwrap();
        assert_close(e.values[0].re, th.cos(), 1e-14);
        assert_close(e.values[0].im.abs(), th.sin(), 1e-14);
        assert_close(e.values[0].abs(), 1.0, 1e-14);
    }

    #[test]
    fn eig2_identity() {
        let e = eig2(&Matrix::identity(2)).unwrap();
        assert_eq!(e.values[0], ComplexPair::new(1.0, 0.0));
        assert_eq!(e.vectors[0][0], ComplexPair::new(1.0, 0.0));
        assert_eq!(e.vectors[1][1], ComplexPair::new(1.0, 0.0));
    }

    #[test]
    fn eig2_defective() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert!(matches!(eig2(&m), Err(LinalgError::DefectiveBlock)));
    }

    #[test]
    fn eig2_modulus_is_sqrt_det() {
        let mut state = 31u64;
        let mut seen = 0;
        while seen < 200 {
            let m = rng_matrix(2, 2, &mut state);
            let tr = m.trace();
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            if tr * tr - 4.0 * det >= 0.0 {
                continue;
            }
            seen += 1;
            let e = eig2(&m).unwrap();
            assert_close(e.values[0].abs(), det.sqrt(), 1e-12);
            // eigenvector residual: (M - lam I) v = 0
            let lam = e.values[0];
            let v = e.vectors[0];
            for r in 0..2 {
                let mv = ComplexPair::new(
                    m[(r, 0)] * v[0].re + m[(r, 1)] * v[1].re,
                    m[(r, 0)] * v[0].im + m[(r, 1)] * v[1].im,
                );
                let lv = lam.mul(&v[r]);
                assert!(mv.sub(&lv).abs() < 1e-10);
            }
        }
    }
}
