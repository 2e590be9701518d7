//! Dense complex matrices with the bipartite index conventions used across the
//! crate.
//!
//! For a bipartite operator on `C^d ⊗ C^d` the row (and column) index of the
//! basis vector `|i⟩ ⊗ |k⟩` is `i * d + k`: the first factor is the slow index.
//! [`ComplexMatrix::kron`], [`ComplexMatrix::partial_transpose`] and
//! [`ComplexMatrix::realign`] all rely on this.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// `u v†`
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise comparison with an explicit absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.max_abs_diff(other) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.approx_eq(&self.adjoint(), tol)
    }

    /// Kronecker product; row index of `A ⊗ B` is `i * B.rows + k`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        Self::from_fn(rows, cols, |r, c| {
            let (i, k) = (r / other.rows, r % other.rows);
            let (j, l) = (c / other.cols, c % other.cols);
            self.get(i, j) * other.get(k, l)
        })
    }

    fn check_bipartite(&self, d: usize) -> Result<()> {
        if self.rows != d * d || self.cols != d * d {
            return Err(Error::Shape(format!(
                "expected {0}x{0} bipartite operator, got {1}x{2}",
                d * d,
                self.rows,
                self.cols
            )));
        }
        Ok(())
    }

    /// Partial transpose on the second factor: `[(i,k),(j,l)] -> [(i,l),(j,k)]`.
    pub fn partial_transpose(&self, d: usize) -> Result<Self> {
        self.check_bipartite(d)?;
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..d {
            for k in 0..d {
                for j in 0..d {
                    for l in 0..d {
                        out.set(i * d + l, j * d + k, self.get(i * d + k, j * d + l));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Realignment: `[(i,k),(j,l)] -> [(i,j),(k,l)]`.
    pub fn realign(&self, d: usize) -> Result<Self> {
        self.check_bipartite(d)?;
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..d {
            for k in 0..d {
                for j in 0..d {
                    for l in 0..d {
                        out.set(i * d + j, k * d + l, self.get(i * d + k, j * d + l));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Trace over the first factor, leaving a `d x d` operator on the second.
    pub fn partial_trace_first(&self, d: usize) -> Result<Self> {
        self.check_bipartite(d)?;
        Ok(Self::from_fn(d, d, |k, l| {
            (0..d).map(|i| self.get(i * d + k, i * d + l)).sum()
        }))
    }

    /// Trace over the second factor, leaving a `d x d` operator on the first.
    pub fn partial_trace_second(&self, d: usize) -> Result<Self> {
        self.check_bipartite(d)?;
        Ok(Self::from_fn(d, d, |i, j| {
            (0..d).map(|k| self.get(i * d + k, j * d + k)).sum()
        }))
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::Shape("eigenvalues of a non-square matrix".into()));
        }
        hermitian_eigenvalues(self.to_nalgebra())
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let svd = SVD::try_new(self.to_nalgebra(), false, false, EIG_EPS, EIG_MAX_ITER)
            .ok_or(Error::Svd)?;
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }

    pub fn trace_norm(&self) -> Result<f64> {
        Ok(self.singular_values()?.iter().sum())
    }

    /// `self * v`
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }
}

pub(crate) fn hermitian_eigenvalues(m: DMatrix<Complex64>) -> Result<Vec<f64>> {
    let eig = SymmetricEigen::try_new(m, EIG_EPS, EIG_MAX_ITER).ok_or(Error::Eigensolver)?;
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}
