//! Small dense linear algebra: row-major matrices, Householder QR with
//! explicit least-squares weight rows, Cholesky, and positive-definite repair
//! for correlation matrices.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, Real};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds an `n x p` matrix from `p` columns of equal length.
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest asymmetry `|a_ij - a_ji|`; `None` when not square.
    pub fn asymmetry(&self) -> Option<T> {
        if !self.is_square() {
            return None;
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        Some(worst)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Thin QR factorization of a tall matrix by Householder reflections.
#[derive(Debug, Clone)]
pub struct Qr<T> {
    /// `n x p` with orthonormal columns.
    pub q: Matrix<T>,
    /// `p x p` upper triangular.
    pub r: Matrix<T>,
}

/// Householder QR of an `n x p` matrix with `n >= p`.
///
/// A column whose diagonal entry in `R` falls below `1e-10 * ||X||_F` is
/// reported as the first rank-deficient column.
pub fn householder_qr<T: Real>(x: &Matrix<T>) -> Result<Qr<T>> {
    let (n, p) = (x.rows(), x.cols());
    if n < p {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {p} columns"
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite {
            what: "design matrix".into(),
        });
    }
    let tol = lit::<T>(1e-10) * x.frobenius_norm();
    let mut a = x.clone();
    let mut vs: Vec<Vec<T>> = Vec::with_capacity(p);
    for k in 0..p {
        let norm = (k..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<T>().sqrt();
        if norm <= tol {
            return Err(Error::RankDeficient { column: k });
        }
        let alpha = if a[(k, k)] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..n).map(|i| a[(i, k)]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 > T::zero() {
            for j in k..p {
                let proj = (k..n).fold(T::zero(), |acc, i| acc + v[i - k] * a[(i, j)]);
                let f = lit::<T>(2.0) * proj / vnorm2;
                for i in k..n {
                    a[(i, j)] = a[(i, j)] - f * v[i - k];
                }
            }
        }
        if a[(k, k)].abs() <= tol {
            return Err(Error::RankDeficient { column: k });
        }
        vs.push(v);
    }
    let r = Matrix::from_fn(p, p, |i, j| if j >= i { a[(i, j)] } else { T::zero() });
    // Accumulate the thin Q by applying the reflections to the first p unit vectors.
    let mut q = Matrix::zeros(n, p);
    for j in 0..p {
        q[(j, j)] = T::one();
    }
    for k in (0..p).rev() {
        let v = &vs[k];
        let vnorm2 = dot(v, v);
        if vnorm2 == T::zero() {
            continue;
        }
        for j in 0..p {
            let proj = (k..n).fold(T::zero(), |acc, i| acc + v[i - k] * q[(i, j)]);
            let f = lit::<T>(2.0) * proj / vnorm2;
            for i in k..n {
                q[(i, j)] = q[(i, j)] - f * v[i - k];
            }
        }
    }
    Ok(Qr { q, r })
}

/// Solves `R x = b` for upper-triangular `R`.
pub fn back_substitute<T: Real>(r: &Matrix<T>, b: &[T]) -> Vec<T> {
    let p = r.rows();
    let mut x = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut acc = b[i];
        for j in i + 1..p {
            acc = acc - r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    x
}

/// Least-squares weight rows `W = (X^T X)^{-1} X^T = R^{-1} Q^T` (`p x n`).
pub fn least_squares_weights<T: Real>(qr: &Qr<T>) -> Matrix<T> {
    let (n, p) = (qr.q.rows(), qr.q.cols());
    let mut w = Matrix::zeros(p, n);
    let mut col = vec![T::zero(); p];
    for i in 0..n {
        col.copy_from_slice(qr.q.row(i));
        let x = back_substitute(&qr.r, &col);
        for s in 0..p {
            w[(s, i)] = x[s];
        }
    }
    w
}

/// Lower Cholesky factor `L` with `L L^T = A`.
pub fn cholesky<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("cholesky of non-square matrix".into()));
    }
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let lj = l.row(j)[..j].to_vec();
        let d = a[(j, j)] - dot(&lj, &lj);
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &lj);
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
pub fn spd_inverse<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let l = cholesky(a)?;
    let n = a.rows();
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for c in 0..n {
        e.iter_mut().for_each(|x| *x = T::zero());
        e[c] = T::one();
        // forward solve L y = e
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let s = e[i] - dot(&l.row(i)[..i], &y[..i]);
            y[i] = s / l[(i, i)];
        }
        // back solve L^T x = y
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        for r in 0..n {
            inv[(r, c)] = x[r];
        }
    }
    Ok(inv)
}

/// Symmetric correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T> {
    m: Matrix<T>,
}

impl<T: Real> CorrelationMatrix<T> {
    /// Validates symmetry, unit diagonal and off-diagonal entries in `[-1, 1]`.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch("correlation matrix must be square".into()));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite {
                what: "correlation matrix".into(),
            });
        }
        let tol = lit::<T>(1e-12);
        if m.asymmetry().unwrap_or(T::zero()) > tol {
            return Err(invalid("correlation matrix is not symmetric"));
        }
        for i in 0..m.rows() {
            if (m[(i, i)] - T::one()).abs() > tol {
                return Err(invalid(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                if m[(i, j)].abs() > T::one() + tol {
                    return Err(invalid(format!("entry ({i},{j}) outside [-1, 1]")));
                }
            }
        }
        Ok(Self { m })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: Matrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.m
    }

    pub fn cholesky(&self) -> Result<Matrix<T>> {
        cholesky(&self.m)
    }
}

/// Outcome of [`ensure_pd`].
#[derive(Debug, Clone)]
pub struct PdRepair<T> {
    pub matrix: CorrelationMatrix<T>,
    pub factor: Matrix<T>,
    /// Shrinkage weight toward the identity; 0 when the input was already PD.
    pub lambda: T,
}

/// Shrinkage grid for [`ensure_pd`]: 0, 1e-6, 1e-5, ..., 1e-1, 1.
pub const SHRINKAGE_GRID: [f64; 8] = [0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];

/// Repairs a symmetric matrix into a positive definite correlation matrix by
/// shrinking toward the identity, `(1 - lambda) A + lambda I`, with the
/// smallest `lambda` on [`SHRINKAGE_GRID`] for which Cholesky succeeds.
pub fn ensure_pd<T: Real>(a: &Matrix<T>) -> Result<PdRepair<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("ensure_pd of non-square matrix".into()));
    }
    if a.asymmetry().unwrap_or(T::zero()) > lit::<T>(1e-12) * a.max_abs().max(T::one()) {
        return Err(invalid("ensure_pd requires a symmetric matrix"));
    }
    let n = a.rows();
    for &lam in &SHRINKAGE_GRID {
        let lambda = lit::<T>(lam);
        let shrunk = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                T::one()
            } else {
                (T::one() - lambda) * a[(i, j)]
            }
        });
        if let Ok(l) = cholesky(&shrunk) {
            return Ok(PdRepair {
                matrix: CorrelationMatrix { m: shrunk },
                factor: l,
                lambda,
            });
        }
    }
    unreachable!("the identity is positive definite")
}
