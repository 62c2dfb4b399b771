//! Dense real matrix algebra used throughout the crate.
//!
//! Symmetric matrices get a dedicated [`SymMatrix`] type whose entries are
//! exactly symmetric. Eigendecompositions use the cyclic Jacobi rotation
//! method, which keeps full absolute accuracy for small eigenvalues; that
//! matters here because every downstream decision (Morse indices, kernels,
//! crossing signatures) is a sign test on eigenvalues near zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used when deciding whether raw input is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Default maximum number of Jacobi sweeps.
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Default relative tolerance for order and commutation tests.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix must have positive dimension")]
    Empty,
    #[error("matrix is not square: row {row} has {len} entries, expected {dim}")]
    NotSquare { row: usize, len: usize, dim: usize },
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {asymmetry:e}")]
    NotSymmetric {
        row: usize,
        col: usize,
        asymmetry: f64,
    },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("expected even dimension, got {0}")]
    OddDimension(usize),
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
    #[error("invalid interval: lower end {a} exceeds upper end {b}")]
    InvalidInterval { a: f64, b: f64 },
}

/// Dense row-major real matrix, not necessarily square or symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s * rhs`
    pub fn axpy(&self, s: f64, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a + s * b)
    }

    fn zip_with(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.cols.max(1))
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Determinant via LU factorisation with partial pivoting.
    pub fn det(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let (pivot, pmax) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
            }
        }
        det
    }
}

/// Real symmetric matrix with exactly symmetric storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = LinalgError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

impl SymMatrix {
    /// Builds a symmetric matrix from nested rows.
    ///
    /// Rejects ragged, empty, non-finite or visibly asymmetric input; the
    /// stored entries are the exact average of `a[i][j]` and `a[j][i]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(LinalgError::Empty);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(LinalgError::NotSquare {
                    row: i,
                    len: row.len(),
                    dim,
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::Empty);
        }
        assert_eq!(data.len(), dim * dim, "row-major buffer has wrong length");
        let scale = 1.0 + data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            for j in 0..dim {
                if !data[i * dim + j].is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
            }
        }
        for i in 0..dim {
            for j in i + 1..dim {
                let asym = (data[i * dim + j] - data[j * dim + i]).abs();
                if asym > SYMMETRY_TOL * scale {
                    return Err(LinalgError::NotSymmetric {
                        row: i,
                        col: j,
                        asymmetry: asym,
                    });
                }
            }
        }
        Ok(Self::symmetrized(dim, data))
    }

    /// Wraps a buffer that is symmetric up to rounding, averaging the two
    /// triangles. Used internally where symmetry holds by construction.
    pub(crate) fn symmetrized(dim: usize, mut data: Vec<f64>) -> Self {
        for i in 0..dim {
            for j in i + 1..dim {
                let v = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "SymMatrix dimension must be positive");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, c: f64) -> Self {
        Self::diagonal(&vec![c; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * dim + i] = d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_row_major(self.dim, self.dim, self.data.clone())
    }

    pub fn require_even(&self) -> Result<(), LinalgError> {
        if self.dim % 2 == 0 {
            Ok(())
        } else {
            Err(LinalgError::OddDimension(self.dim))
        }
    }

    fn check_dim(&self, other: &SymMatrix) -> Result<(), LinalgError> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(LinalgError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            })
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.axpy(-1.0, other)
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim, "SymMatrix dimension mismatch");
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `(1 - theta) * self + theta * other`
    pub fn lerp(&self, other: &SymMatrix, theta: f64) -> SymMatrix {
        assert_eq!(self.dim, other.dim, "SymMatrix dimension mismatch");
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (1.0 - theta) * a + theta * b)
                .collect(),
        }
    }

    pub fn shifted(&self, delta: f64) -> SymMatrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += delta;
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, x.len());
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Bilinear form `yᵀ A x`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.mul_vec(x), y)
    }

    /// Restriction of the form to the span of `basis`: `B[i][j] = b_iᵀ A b_j`.
    pub fn restrict_to(&self, basis: &[Vec<f64>]) -> SymMatrix {
        let images: Vec<Vec<f64>> = basis.iter().map(|b| self.mul_vec(b)).collect();
        let k = basis.len();
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                data[i * k + j] = dot(&images[j], &basis[i]);
            }
        }
        SymMatrix::symmetrized(k, data)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.dim)
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    s += self.data[i * self.dim + j].powi(2);
                }
            }
        }
        s.sqrt()
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        let d = self.eigenvectors.rows();
        (0..d).map(|i| self.eigenvectors.get(i, k)).collect()
    }

    /// Rebuilds `V diag(μ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let d = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for i in 0..d {
            for k in 0..d {
                scaled.set(i, k, scaled.get(i, k) * self.eigenvalues[k]);
            }
        }
        scaled.matmul(&self.eigenvectors.transpose())
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
pub fn eig_sym(a: &SymMatrix) -> Result<EigenDecomposition, LinalgError> {
    eig_sym_with(a, DEFAULT_MAX_SWEEPS)
}

pub fn eig_sym_with(a: &SymMatrix, max_sweeps: usize) -> Result<EigenDecomposition, LinalgError> {
    let (values, vectors_t) = jacobi(a, true, max_sweeps)?;
    let d = a.dim();
    let vt = vectors_t.expect("eigenvectors requested");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let mut eigenvectors = Matrix::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..d {
            eigenvectors.set(i, col, vt[k * d + i]);
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending. Roughly half the work of [`eig_sym`].
pub fn eigvals_sym(a: &SymMatrix) -> Result<Vec<f64>, LinalgError> {
    let (mut values, _) = jacobi(a, false, DEFAULT_MAX_SWEEPS)?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Cyclic Jacobi sweeps. Returns unsorted eigenvalues and, if requested, the
/// eigenvectors stored as rows of a row-major buffer.
fn jacobi(
    a: &SymMatrix,
    want_vectors: bool,
    max_sweeps: usize,
) -> Result<(Vec<f64>, Option<Vec<f64>>), LinalgError> {
    let d = a.dim();
    let mut m = a.data.clone();
    let mut v = want_vectors.then(|| {
        let mut v = vec![0.0; d * d];
        for i in 0..d {
            v[i * d + i] = 1.0;
        }
        v
    });
    let total = a.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = f64::EPSILON * total;
    let mut off = a.off_diagonal_norm();
    let mut sweeps = 0;
    while off > target && off > f64::MIN_POSITIVE {
        if sweeps == max_sweeps {
            return Err(LinalgError::NoConvergence {
                sweeps,
                off_diagonal: off,
            });
        }
        sweeps += 1;
        for p in 0..d {
            for q in p + 1..d {
                let apq = m[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                // Skip rotations that cannot change the diagonal in floating point.
                if sweeps > 4
                    && app.abs() + 100.0 * apq.abs() == app.abs()
                    && aqq.abs() + 100.0 * apq.abs() == aqq.abs()
                {
                    m[p * d + q] = 0.0;
                    m[q * d + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, d, p, q, c, s);
                m[p * d + p] = app - t * apq;
                m[q * d + q] = aqq + t * apq;
                m[p * d + q] = 0.0;
                m[q * d + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    let (rp, rq) = (p * d, q * d);
                    for k in 0..d {
                        let vp = v[rp + k];
                        let vq = v[rq + k];
                        v[rp + k] = c * vp - s * vq;
                        v[rq + k] = s * vp + c * vq;
                    }
                }
            }
        }
        off = {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        s += m[i * d + j] * m[i * d + j];
                    }
                }
            }
            s.sqrt()
        };
    }
    let values = (0..d).map(|i| m[i * d + i]).collect();
    Ok((values, v))
}

/// Applies the rotation in the (p, q) plane to rows and columns p, q
/// (off-diagonal part only; the 2×2 pivot block is set by the caller).
#[inline]
fn rotate(m: &mut [f64], d: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..d {
        if k == p || k == q {
            continue;
        }
        let akp = m[k * d + p];
        let akq = m[k * d + q];
        let np = c * akp - s * akq;
        let nq = s * akp + c * akq;
        m[k * d + p] = np;
        m[p * d + k] = np;
        m[k * d + q] = nq;
        m[q * d + k] = nq;
    }
}

/// Number of eigenvalues strictly below `-tol`.
pub fn morse_index(a: &SymMatrix, tol: f64) -> Result<usize, LinalgError> {
    Ok(eigvals_sym(a)?.iter().filter(|&&mu| mu < -tol).count())
}

/// Morse index of an already computed ascending spectrum.
pub fn morse_index_of(eigenvalues: &[f64], tol: f64) -> usize {
    eigenvalues.iter().filter(|&&mu| mu < -tol).count()
}

pub fn min_eigenvalue(a: &SymMatrix) -> Result<f64, LinalgError> {
    Ok(eigvals_sym(a)?[0])
}

/// Löwner order `A ≤ B`: smallest eigenvalue of `B − A` is at least `−tol`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool, LinalgError> {
    Ok(loewner_margin(a, b)? >= -tol)
}

/// Smallest eigenvalue of `B − A`; nonnegative exactly when `A ≤ B`.
pub fn loewner_margin(a: &SymMatrix, b: &SymMatrix) -> Result<f64, LinalgError> {
    a.check_dim(b)?;
    min_eigenvalue(&b.sub(a))
}

/// Orthonormal eigenvectors whose eigenvalues have modulus at most `tol`.
pub fn near_null_space(a: &SymMatrix, tol: f64) -> Result<Vec<Vec<f64>>, LinalgError> {
    let eig = eig_sym(a)?;
    Ok(eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, mu)| mu.abs() <= tol)
        .map(|(k, _)| eig.eigenvector(k))
        .collect())
}

/// Standard symplectic matrix `J = [[0, −Iₙ], [Iₙ, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticJ {
    pub n: usize,
}

impl SymplecticJ {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "symplectic dimension must be positive");
        Self { n }
    }

    pub fn for_dim(dim: usize) -> Result<Self, LinalgError> {
        if dim == 0 {
            Err(LinalgError::Empty)
        } else if dim % 2 != 0 {
            Err(LinalgError::OddDimension(dim))
        } else {
            Ok(Self::new(dim / 2))
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn matrix(&self) -> Matrix {
        let n = self.n;
        let mut j = Matrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j.set(i, n + i, -1.0);
            j.set(n + i, i, 1.0);
        }
        j
    }

    /// `J x` without forming the matrix.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(x.len(), 2 * n);
        let mut y = vec![0.0; 2 * n];
        for i in 0..n {
            y[i] = -x[n + i];
            y[n + i] = x[i];
        }
        y
    }
}

/// Checks `‖JC − CJ‖_∞ ≤ tol · (1 + ‖C‖_∞)`. Odd dimensions never commute.
pub fn commutes_with_j(c: &SymMatrix, tol: f64) -> bool {
    let Ok(j) = SymplecticJ::for_dim(c.dim()) else {
        return false;
    };
    let j = j.matrix();
    let cm = c.to_matrix();
    let comm = j.matmul(&cm).sub(&cm.matmul(&j));
    comm.norm_inf() <= tol * (1.0 + c.norm_inf())
}

/// `exp(c t J) = cos(ct) I + sin(ct) J`.
pub fn exp_cj(c: f64, t: f64, n: usize) -> Matrix {
    let (s, co) = (c * t).sin_cos();
    Matrix::identity(2 * n)
        .scaled(co)
        .axpy(s, &SymplecticJ::new(n).matrix())
}

/// `|{k ∈ ℤ : a < k ≤ b}|`.
pub fn count_integers_half_open(a: f64, b: f64) -> Result<usize, LinalgError> {
    if a > b || a.is_nan() || b.is_nan() {
        return Err(LinalgError::InvalidInterval { a, b });
    }
    Ok((b.floor() - a.floor()) as usize)
}

/// Singular values in ascending order, by one-sided Jacobi rotations.
/// Small singular values keep high relative accuracy, which is what the
/// kernel-dimension tests of `M − I` rely on.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    // Work on columns of Aᵀ when A is wide so the loop always orthogonalises
    // the shorter side.
    let work = if a.rows() < a.cols() { a.transpose() } else { a.clone() };
    let (m, n) = (work.rows(), work.cols());
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| work.get(i, j)).collect())
        .collect();
    for _ in 0..DEFAULT_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    sv.sort_by(f64::total_cmp);
    sv
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
