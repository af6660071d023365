//! Dense complex linear algebra for small Hermitian systems.
//!
//! Matrices are stored row-major: entry `(i, j)` lives at `data[i * cols + j]`.
//! All indices in this crate are zero-based.
//!
//! Only what the solver and the certifier need is provided: Cholesky
//! factorization and solves, quadratic forms, and a full Hermitian spectrum
//! (used for minimum-eigenvalue and eigenvalue-gap checks).

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

/// A dense complex column vector.
pub type CVector = Vec<Complex64>;

/// Tolerance constants shared by every numerical predicate in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative residual allowed for linear solves.
    pub residual: f64,
    /// Negative eigenvalue slack, relative to `1 + ||A||`, still counted as PSD.
    pub psd_slack: f64,
    /// Imaginary part allowed on quantities that are real in exact arithmetic.
    pub imag_slack: f64,
}

impl Tolerances {
    /// Cholesky pivots at or below this value are rejected.
    pub fn pivot_floor(dim: usize, max_diag: f64) -> f64 {
        dim as f64 * f64::EPSILON * max_diag
    }
}

pub const TOLERANCES: Tolerances = Tolerances {
    residual: 1e-10,
    psd_slack: 1e-9,
    imag_slack: 1e-10,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOLERANCES
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq)]
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
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
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

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Builds a matrix from real row vectors.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<CVector> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
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

    /// Raw row-major storage.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<CVector, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Entrywise comparison within an absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| (a - b).norm() <= tol)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

/// A square matrix with exact conjugate symmetry.
///
/// Construction reads only the lower triangle (including the diagonal) and
/// mirrors it, so `A(i, j) == conj(A(j, i))` holds bit-for-bit and diagonal
/// entries are real. Mutators only apply Hermitian-preserving updates.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.0[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the lower triangle `i >= j` only.
    pub fn from_lower_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..i {
                let z = f(i, j);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
            m[(i, i)] = Complex64::new(f(i, i).re, 0.0);
        }
        Self(m)
    }

    /// Symmetrizes a square matrix from its lower triangle.
    pub fn from_lower(m: &ComplexMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        Ok(Self::from_lower_fn(m.rows(), |i, j| m[(i, j)]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        Self::from_lower(&ComplexMatrix::from_real_rows(rows))
    }

    /// The rank-one matrix `v v^†`.
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_lower_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.diag(i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    /// `self += c * v v^†`.
    pub fn add_outer(&mut self, c: f64, v: &[Complex64]) {
        assert_eq!(v.len(), self.dim());
        let n = self.dim();
        for i in 0..n {
            for j in 0..i {
                let z = c * v[i] * v[j].conj();
                self.0[(i, j)] += z;
                self.0[(j, i)] = self.0[(i, j)].conj();
            }
            self.0[(i, i)].re += c * v[i].norm_sqr();
        }
    }

    /// Adds a real value to diagonal entry `i`.
    pub fn add_diag(&mut self, i: usize, x: f64) {
        self.0[(i, i)].re += x;
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::from_lower_fn(self.dim(), |i, j| self.get(i, j) + c * other.get(i, j))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_lower_fn(self.dim(), |i, j| c * self.get(i, j))
    }

    /// `A • B = trace(A B)`, real for Hermitian arguments.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (self.get(i, j) * other.get(j, i)).re;
            }
        }
        s
    }

    /// The principal submatrix on indices `start..dim`.
    pub fn trailing(&self, start: usize) -> Self {
        let n = self.dim() - start;
        Self::from_lower_fn(n, |i, j| self.get(start + i, start + j))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<CVector, LinalgError> {
        self.0.mul_vec(x)
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L^†`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: ComplexMatrix,
}

impl Cholesky {
    pub fn factor(&self) -> &ComplexMatrix {
        &self.l
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<CVector, LinalgError> {
        let n = self.l.rows();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        Ok(y)
    }

    /// Explicit inverse, built column by column.
    pub fn inverse(&self) -> HermitianMatrix {
        let n = self.l.rows();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            cols.push(self.solve(&e).expect("dimension checked"));
        }
        HermitianMatrix::from_lower_fn(n, |i, j| cols[j][i])
    }
}

pub fn cholesky(a: &HermitianMatrix) -> Result<Cholesky, LinalgError> {
    let n = a.dim();
    let max_diag = (0..n).map(|i| a.diag(i)).fold(0.0, f64::max);
    let floor = Tolerances::pivot_floor(n, max_diag);
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.diag(j);
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > floor && d > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(Cholesky { l })
}

pub fn solve_hermitian_pd(a: &HermitianMatrix, b: &[Complex64]) -> Result<CVector, LinalgError> {
    if b.len() != a.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    cholesky(a)?.solve(b)
}

/// `x^† A x`.
pub fn quadratic_form(a: &HermitianMatrix, x: &[Complex64]) -> Result<f64, LinalgError> {
    let ax = a.mul_vec(x)?;
    let s: Complex64 = x.iter().zip(&ax).map(|(xi, yi)| xi.conj() * yi).sum();
    debug_assert!(
        s.im.abs() <= TOLERANCES.imag_slack * (1.0 + s.re.abs()) * (1.0 + a.max_abs()),
        "quadratic form has imaginary part {}",
        s.im
    );
    Ok(s.re)
}

/// All eigenvalues of a Hermitian matrix, ascending.
///
/// `A = X + iY` is embedded as the real symmetric `[[X, -Y], [Y, X]]`, whose
/// spectrum is that of `A` with every eigenvalue doubled; cyclic Jacobi
/// rotations diagonalize the embedding.
pub fn eigenvalues(a: &HermitianMatrix) -> Vec<f64> {
    let n = a.dim();
    if n == 0 {
        return Vec::new();
    }
    let size = 2 * n;
    let mut s = vec![0.0; size * size];
    for i in 0..n {
        for j in 0..n {
            let z = a.get(i, j);
            s[i * size + j] = z.re;
            s[(i + n) * size + (j + n)] = z.re;
            s[i * size + (j + n)] = -z.im;
            s[(i + n) * size + j] = z.im;
        }
    }
    let mut eig = jacobi_eigenvalues(&mut s, size);
    eig.sort_by(f64::total_cmp);
    eig.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

pub fn min_eigenvalue(a: &HermitianMatrix) -> f64 {
    eigenvalues(a).first().copied().unwrap_or(0.0)
}

fn jacobi_eigenvalues(s: &mut [f64], n: usize) -> Vec<f64> {
    let scale = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i * n + j] * s[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = s[p * n + p];
                let aqq = s[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = s[k * n + p];
                    let akq = s[k * n + q];
                    s[k * n + p] = c * akp - sn * akq;
                    s[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = s[p * n + k];
                    let aqk = s[q * n + k];
                    s[p * n + k] = c * apk - sn * aqk;
                    s[q * n + k] = sn * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| s[i * n + i]).collect()
}

/// `x^† y`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
