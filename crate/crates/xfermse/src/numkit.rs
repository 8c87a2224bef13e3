//! Minimal dense linear algebra for the rest of the crate.
//!
//! Everything here is small, explicit, and deterministic: a row-major `f64`
//! matrix, Gram products, column means, and a solver for symmetric
//! positive-(semi)definite systems. The solver tries Cholesky first and falls
//! back to a Jacobi eigendecomposition with pseudo-inverse thresholding, so a
//! rank-deficient system (for instance a regression with fewer samples than
//! input columns and no regularization) still yields the minimum-norm
//! solution instead of failing.
//!
//! There is deliberately no general-purpose factorization zoo here — no LU,
//! QR, or sparse storage. The crate only ever solves symmetric systems that
//! come from normal equations.

use std::fmt;

/// Relative tolerance used by [`solve_spd`] when checking that its input is
/// symmetric: the largest absolute difference between `S[i][j]` and `S[j][i]`
/// must not exceed this fraction of the largest absolute entry of `S`.
pub const SYMMETRY_REL_TOL: f64 = 1e-10;

/// A Cholesky pivot at or below this fraction of the largest diagonal entry
/// is treated as a failure, routing the solve to the eigendecomposition
/// fallback. Without the floor, near-singular systems would "succeed" with
/// catastrophically amplified rounding noise.
pub const CHOLESKY_PIVOT_REL_TOL: f64 = 1e-12;

/// Eigenvalues at or below this fraction of the largest eigenvalue are
/// treated as exact zeros when building the pseudo-inverse.
pub const EIGEN_RANK_REL_TOL: f64 = 1e-12;

/// Maximum number of full Jacobi sweeps before the eigensolver stops
/// refining. Symmetric matrices of the sizes used here converge in well
/// under ten sweeps; the cap only guards against pathological input.
const JACOBI_MAX_SWEEPS: usize = 100;

/// The Jacobi iteration stops once the off-diagonal Frobenius norm falls
/// below this fraction of the total Frobenius norm.
const JACOBI_OFF_REL_TOL: f64 = 1e-14;

/// Errors produced by the linear-algebra layer.
#[derive(Debug, Clone, PartialEq)]
pub enum NumError {
    /// An operation received a matrix with zero rows or zero columns.
    Empty { context: &'static str },
    /// Two operands had incompatible shapes.
    DimensionMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// The data buffer length does not match `rows × cols`.
    BadLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    /// A matrix entry was NaN or infinite.
    NonFinite { row: usize, col: usize },
    /// `solve_spd` was handed a matrix that is not symmetric within
    /// [`SYMMETRY_REL_TOL`].
    NotSymmetric { max_deviation: f64, tolerance: f64 },
}

impl fmt::Display for NumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumError::Empty { context } => write!(f, "{context}: matrix must be nonempty"),
            NumError::DimensionMismatch {
                context,
                expected,
                found,
            } => write!(
                f,
                "{context}: expected a {}x{} operand, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            NumError::BadLength { rows, cols, len } => write!(
                f,
                "data length {len} does not match {rows}x{cols} = {} entries",
                rows * cols
            ),
            NumError::NonFinite { row, col } => {
                write!(f, "entry ({row}, {col}) is not a finite number")
            }
            NumError::NotSymmetric {
                max_deviation,
                tolerance,
            } => write!(
                f,
                "matrix is not symmetric: max |S[i][j] - S[j][i]| = {max_deviation:e} \
                 exceeds tolerance {tolerance:e}"
            ),
        }
    }
}

impl std::error::Error for NumError {}

/// Dense row-major matrix of 64-bit floats.
///
/// Rows are samples and columns are variables everywhere in this crate, so
/// row-major storage keeps per-sample loops contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// A `rows × cols` matrix of zeros.
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// The `n × n` identity matrix.
    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from a row-major buffer, validating the length and
    /// that every entry is finite. This is the constructor for data that
    /// crosses an external boundary (files, user input).
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix, NumError> {
        if data.len() != rows * cols {
            return Err(NumError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(NumError::NonFinite {
                    row: if cols == 0 { 0 } else { i / cols },
                    col: if cols == 0 { 0 } else { i % cols },
                });
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from explicit rows. Intended for literals in tests,
    /// examples, and docs.
    ///
    /// # Panics
    /// Panics if the rows are empty, ragged, or contain non-finite values.
    pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
        assert!(!rows.is_empty(), "from_rows: need at least one row");
        let cols = rows[0].len();
        assert!(cols > 0, "from_rows: rows must be nonempty");
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "from_rows: row {i} has a different length");
            data.extend_from_slice(r);
        }
        let n = rows.len();
        match Matrix::from_vec(n, cols, data) {
            Ok(m) => m,
            Err(e) => panic!("from_rows: {e}"),
        }
    }

    /// Number of rows.
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// True when the matrix has no entries.
    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Entry at row `i`, column `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    /// Sets the entry at row `i`, column `j`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a contiguous slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable view of row `i`.
    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// The full row-major buffer.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Consumes the matrix and returns its row-major buffer.
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// The transpose as a new matrix.
    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NumError> {
        if self.cols != other.rows {
            return Err(NumError::DimensionMismatch {
                context: "matmul",
                expected: (self.cols, other.cols),
                found: (other.rows, other.cols),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a_ik) in a_row.iter().enumerate() {
                if a_ik == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for j in 0..other.cols {
                    out_row[j] += a_ik * b_row[j];
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`, accumulated one sample row at a time so both operands
    /// stream through memory contiguously.
    pub fn transpose_mul(&self, other: &Matrix) -> Result<Matrix, NumError> {
        if self.rows != other.rows {
            return Err(NumError::DimensionMismatch {
                context: "transpose_mul",
                expected: (self.rows, other.cols),
                found: (other.rows, other.cols),
            });
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a_row = self.row(r);
            let b_row = other.row(r);
            for (i, &a_ri) in a_row.iter().enumerate() {
                if a_ri == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for j in 0..other.cols {
                    out_row[j] += a_ri * b_row[j];
                }
            }
        }
        Ok(out)
    }

    /// Squared Frobenius norm, `Σ entryᵢⱼ²`.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multiplies every entry in place.
    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    /// Adds `value` to every diagonal entry (the matrix must be square).
    pub fn add_diagonal(&mut self, value: f64) {
        debug_assert_eq!(self.rows, self.cols, "add_diagonal: matrix must be square");
        for i in 0..self.rows {
            self.data[i * self.cols + i] += value;
        }
    }

    /// New matrix containing the given rows, in the given order.
    ///
    /// # Panics
    /// Panics if any index is out of range.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            assert!(i < self.rows, "select_rows: row index {i} out of range");
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

/// The Gram matrix `MᵀM`.
///
/// The upper triangle is accumulated once and mirrored, so the result is
/// symmetric to the last bit. The result is always positive semidefinite up
/// to rounding.
pub fn gram(m: &Matrix) -> Result<Matrix, NumError> {
    if m.is_empty() {
        return Err(NumError::Empty { context: "gram" });
    }
    let p = m.cols;
    let mut out = Matrix::zeros(p, p);
    // Accumulate one outer product per sample row; per row, only the upper
    // triangle entries (i <= j) are touched, with a contiguous inner loop.
    for r in 0..m.rows {
        let row = m.row(r);
        for i in 0..p {
            let x_i = row[i];
            if x_i == 0.0 {
                continue;
            }
            let out_row = &mut out.data[i * p..(i + 1) * p];
            for j in i..p {
                out_row[j] += x_i * row[j];
            }
        }
    }
    // Mirror the upper triangle into the lower one.
    for i in 0..p {
        for j in (i + 1)..p {
            out.data[j * p + i] = out.data[i * p + j];
        }
    }
    Ok(out)
}

/// Column means of `M`, entry `j` being the average of column `j`.
pub fn column_means(m: &Matrix) -> Result<Vec<f64>, NumError> {
    if m.rows == 0 {
        return Err(NumError::Empty {
            context: "column_means",
        });
    }
    let mut means = vec![0.0; m.cols];
    for r in 0..m.rows {
        let row = m.row(r);
        for (j, &v) in row.iter().enumerate() {
            means[j] += v;
        }
    }
    let inv_n = 1.0 / m.rows as f64;
    for v in &mut means {
        *v *= inv_n;
    }
    Ok(means)
}

/// Solves `S · X = B` for a symmetric positive-(semi)definite `S`.
///
/// Cholesky factorization is the primary path. If a pivot falls at or below
/// [`CHOLESKY_PIVOT_REL_TOL`] times the largest diagonal entry — the signature
/// of a semidefinite or indefinite matrix — the solve falls back to a Jacobi
/// eigendecomposition and applies the pseudo-inverse, zeroing eigenvalue
/// directions below [`EIGEN_RANK_REL_TOL`] times the largest eigenvalue. For
/// a consistent singular system this returns the minimum-norm solution.
pub fn solve_spd(s: &Matrix, b: &Matrix) -> Result<Matrix, NumError> {
    if s.is_empty() {
        return Err(NumError::Empty { context: "solve_spd" });
    }
    if s.rows != s.cols {
        return Err(NumError::DimensionMismatch {
            context: "solve_spd: S must be square",
            expected: (s.rows, s.rows),
            found: (s.rows, s.cols),
        });
    }
    if b.rows != s.rows {
        return Err(NumError::DimensionMismatch {
            context: "solve_spd: B row count must match S",
            expected: (s.rows, b.cols),
            found: (b.rows, b.cols),
        });
    }
    let scale = s.max_abs();
    let tol = SYMMETRY_REL_TOL * scale.max(1.0);
    let mut max_dev = 0.0f64;
    for i in 0..s.rows {
        for j in (i + 1)..s.cols {
            max_dev = max_dev.max((s.get(i, j) - s.get(j, i)).abs());
        }
    }
    if max_dev > tol {
        return Err(NumError::NotSymmetric {
            max_deviation: max_dev,
            tolerance: tol,
        });
    }

    match cholesky(s) {
        Some(l) => Ok(cholesky_solve(&l, b)),
        None => Ok(pseudo_solve(s, b)),
    }
}

/// Lower-triangular Cholesky factor of `s`, or `None` when a pivot drops to
/// or below the relative floor (semidefinite / indefinite input).
fn cholesky(s: &Matrix) -> Option<Vec<f64>> {
    let n = s.rows;
    let mut max_diag = 0.0f64;
    for i in 0..n {
        max_diag = max_diag.max(s.get(i, i));
    }
    if max_diag <= 0.0 {
        return None;
    }
    let floor = CHOLESKY_PIVOT_REL_TOL * max_diag;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = s.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= floor {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L·Lᵀ·X = B` given the lower-triangular factor, for all columns of
/// `B` at once.
fn cholesky_solve(l: &[f64], b: &Matrix) -> Matrix {
    let n = b.rows;
    let m = b.cols;
    let mut x = b.clone();
    // Forward substitution: L·W = B.
    for i in 0..n {
        for k in 0..i {
            let l_ik = l[i * n + k];
            if l_ik == 0.0 {
                continue;
            }
            let (head, tail) = x.data.split_at_mut(i * m);
            let w_k = &head[k * m..(k + 1) * m];
            let w_i = &mut tail[..m];
            for j in 0..m {
                w_i[j] -= l_ik * w_k[j];
            }
        }
        let inv = 1.0 / l[i * n + i];
        for v in x.row_mut(i) {
            *v *= inv;
        }
    }
    // Back substitution: Lᵀ·X = W.
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let l_ki = l[k * n + i];
            if l_ki == 0.0 {
                continue;
            }
            let (head, tail) = x.data.split_at_mut(k * m);
            let x_i = &mut head[i * m..(i + 1) * m];
            let x_k = &tail[..m];
            for j in 0..m {
                x_i[j] -= l_ki * x_k[j];
            }
        }
        let inv = 1.0 / l[i * n + i];
        for v in x.row_mut(i) {
            *v *= inv;
        }
    }
    x
}

/// Least-squares / minimum-norm solve via eigendecomposition: `X = V·Λ⁺·Vᵀ·B`
/// with small eigenvalues zeroed.
fn pseudo_solve(s: &Matrix, b: &Matrix) -> Matrix {
    let (eigenvalues, v) = jacobi_eigen(s);
    let max_eig = eigenvalues.iter().fold(0.0f64, |m, &e| m.max(e));
    let threshold = EIGEN_RANK_REL_TOL * max_eig;
    // W = Vᵀ·B, then scale each row by the inverted eigenvalue (or zero).
    let mut w = v
        .transpose_mul(b)
        .expect("pseudo_solve: eigenvector shape is square by construction");
    for (i, &e) in eigenvalues.iter().enumerate() {
        let factor = if max_eig > 0.0 && e > threshold {
            1.0 / e
        } else {
            0.0
        };
        for x in w.row_mut(i) {
            *x *= factor;
        }
    }
    v.matmul(&w)
        .expect("pseudo_solve: V·W dimensions agree by construction")
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns the eigenvalues and the orthonormal eigenvector matrix `V`
/// (columns are eigenvectors), satisfying `S ≈ V·diag(λ)·Vᵀ`.
fn jacobi_eigen(s: &Matrix) -> (Vec<f64>, Matrix) {
    let n = s.rows;
    let mut a = s.data.clone();
    let mut v = Matrix::identity(n);
    if n == 1 {
        return (vec![a[0]], v);
    }
    let total_norm = s.frobenius_norm_sq().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off_sq = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sq += a[p * n + q] * a[p * n + q];
            }
        }
        if (2.0 * off_sq).sqrt() <= JACOBI_OFF_REL_TOL * total_norm.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                // Smaller-angle root of t² + 2θt − 1 = 0, for stability.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                // A ← Jᵀ·A·J, applied as a column then a row update.
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                // V ← V·J accumulates the eigenvectors.
                for k in 0..n {
                    let vkp = v.data[k * n + p];
                    let vkq = v.data[k * n + q];
                    v.data[k * n + p] = c * vkp - sn * vkq;
                    v.data[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| a[i * n + i]).collect();
    (eigenvalues, v)
}
