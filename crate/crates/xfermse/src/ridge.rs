//! Exact multi-output ridge regression with an unpenalized intercept.
//!
//! [`ridge_fit`] minimizes
//!
//! ```text
//! (1/n) Σᵢ ‖yᵢ − A·uᵢ − b‖²  +  λ‖A‖_F²
//! ```
//!
//! over the linear map `A` and intercept `b`. Two conventions matter and are
//! fixed here once for the whole crate:
//!
//! - the intercept is **not** penalized: it is handled by centering the
//!   inputs and targets rather than by appending a constant column, so `b`
//!   absorbs offsets at any λ;
//! - λ multiplies `‖A‖_F²` directly against the **mean** squared error, i.e.
//!   the normal equations read `(S + λI)·Aᵀ = C` with `S` and `C` the
//!   1/n-scaled moment matrices. λ is never rescaled by the sample count.
//!
//! The minimizer is computed in closed form. With λ = 0 and rank-deficient
//! inputs the solver returns the minimum-norm `A` (via the pseudo-inverse
//! fallback in [`crate::numkit::solve_spd`]); the minimum objective value is
//! unique even when the argmin is not.

use std::fmt;

use crate::numkit::{self, Matrix, NumError};

/// Errors from the regression layer.
#[derive(Debug, Clone, PartialEq)]
pub enum RidgeError {
    /// Input and target row counts differ, or a candidate's shape is
    /// inconsistent with the data.
    DimensionMismatch { context: &'static str },
    /// The regularization weight was negative or non-finite.
    BadLambda { lambda: f64 },
    /// A matrix entry was NaN or infinite.
    NonFinite,
    /// No samples were provided.
    Empty,
    /// An underlying linear-algebra failure.
    Num(NumError),
}

impl fmt::Display for RidgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RidgeError::DimensionMismatch { context } => {
                write!(f, "dimension mismatch: {context}")
            }
            RidgeError::BadLambda { lambda } => {
                write!(f, "lambda must be a finite value >= 0, got {lambda}")
            }
            RidgeError::NonFinite => write!(f, "inputs must contain only finite values"),
            RidgeError::Empty => write!(f, "need at least one sample"),
            RidgeError::Num(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RidgeError {}

impl From<NumError> for RidgeError {
    fn from(e: NumError) -> Self {
        RidgeError::Num(e)
    }
}

/// A fitted ridge regression: the linear map, the intercept, and the exact
/// decomposition of the objective value at the minimizer.
#[derive(Debug, Clone)]
pub struct RidgeSolution {
    /// Linear map stored as `output_dim × input_dim`; prediction is `A·u + b`.
    pub a: Matrix,
    /// Intercept, one entry per output dimension.
    pub b: Vec<f64>,
    /// Regularization weight the fit was computed with.
    pub lambda: f64,
    /// `(1/n) Σᵢ ‖yᵢ − A·uᵢ − b‖²` at the minimizer.
    pub mse_term: f64,
    /// `λ‖A‖_F²` at the minimizer.
    pub penalty_term: f64,
    /// Number of training samples.
    pub n: usize,
}

impl RidgeSolution {
    /// The minimized objective, `mse_term + penalty_term`.
    pub fn objective(&self) -> f64 {
        self.mse_term + self.penalty_term
    }

    /// Number of input columns the map consumes.
    pub fn input_dim(&self) -> usize {
        self.a.cols()
    }

    /// Number of output columns the map produces.
    pub fn output_dim(&self) -> usize {
        self.a.rows()
    }
}

fn check_finite(m: &Matrix) -> Result<(), RidgeError> {
    if m.data().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(RidgeError::NonFinite)
    }
}

/// Fits the ridge objective exactly.
///
/// `u` is `n × p` (inputs), `y` is `n × q` (targets); `lambda ≥ 0`. Returns
/// the global minimizer together with the objective decomposition evaluated
/// on the fitted map.
pub fn ridge_fit(u: &Matrix, y: &Matrix, lambda: f64) -> Result<RidgeSolution, RidgeError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(RidgeError::BadLambda { lambda });
    }
    if u.rows() == 0 || y.rows() == 0 || u.is_empty() || y.is_empty() {
        return Err(RidgeError::Empty);
    }
    if u.rows() != y.rows() {
        return Err(RidgeError::DimensionMismatch {
            context: "inputs and targets must have the same number of rows",
        });
    }
    check_finite(u)?;
    check_finite(y)?;

    let n = u.rows();
    let p = u.cols();
    let q = y.cols();
    let inv_n = 1.0 / n as f64;

    let u_mean = numkit::column_means(u)?;
    let y_mean = numkit::column_means(y)?;

    // Centered copies. Centering removes the intercept from the problem:
    // the optimal b is recovered afterwards as ȳ − A·ū.
    let mut u_c = u.clone();
    for i in 0..n {
        let row = u_c.row_mut(i);
        for j in 0..p {
            row[j] -= u_mean[j];
        }
    }
    let mut y_c = y.clone();
    for i in 0..n {
        let row = y_c.row_mut(i);
        for j in 0..q {
            row[j] -= y_mean[j];
        }
    }

    // Normal equations on mean-scaled moments: (S + λI)·Aᵀ = C.
    let mut s = numkit::gram(&u_c)?;
    s.scale(inv_n);
    s.add_diagonal(lambda);
    let mut c = u_c.transpose_mul(&y_c)?;
    c.scale(inv_n);

    let a_t = numkit::solve_spd(&s, &c)?; // p × q
    let a = a_t.transpose(); // q × p

    // b = ȳ − A·ū.
    let mut b = vec![0.0; q];
    for j in 0..q {
        let mut dot = 0.0;
        let a_row = a.row(j);
        for k in 0..p {
            dot += a_row[k] * u_mean[k];
        }
        b[j] = y_mean[j] - dot;
    }

    // Evaluate the objective decomposition on the fitted map.
    let mse_term = mean_squared_residual(&a, &b, u, y);
    let penalty_term = lambda * a.frobenius_norm_sq();

    Ok(RidgeSolution {
        a,
        b,
        lambda,
        mse_term,
        penalty_term,
        n,
    })
}

/// Applies a fitted map to new inputs: row `i` of the result is `A·uᵢ + b`.
pub fn predict(sol: &RidgeSolution, u: &Matrix) -> Result<Matrix, RidgeError> {
    if u.cols() != sol.input_dim() {
        return Err(RidgeError::DimensionMismatch {
            context: "input column count must match the fitted input dimension",
        });
    }
    let q = sol.output_dim();
    let mut out = Matrix::zeros(u.rows(), q);
    for i in 0..u.rows() {
        let u_row = u.row(i);
        let out_row = out.row_mut(i);
        for j in 0..q {
            let a_row = sol.a.row(j);
            let mut acc = sol.b[j];
            for k in 0..u_row.len() {
                acc += a_row[k] * u_row[k];
            }
            out_row[j] = acc;
        }
    }
    Ok(out)
}

/// Evaluates the ridge objective at an arbitrary candidate `(A, b)`:
/// `(1/n) Σᵢ ‖yᵢ − A·uᵢ − b‖² + λ‖A‖_F²`.
///
/// Used by optimality tests to confirm that nothing beats the fitted map; it
/// accepts any consistent candidate, not just fitted ones.
pub fn objective_at(
    a: &Matrix,
    b: &[f64],
    u: &Matrix,
    y: &Matrix,
    lambda: f64,
) -> Result<f64, RidgeError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(RidgeError::BadLambda { lambda });
    }
    if u.rows() == 0 {
        return Err(RidgeError::Empty);
    }
    if u.rows() != y.rows() {
        return Err(RidgeError::DimensionMismatch {
            context: "inputs and targets must have the same number of rows",
        });
    }
    if a.cols() != u.cols() || a.rows() != y.cols() || b.len() != y.cols() {
        return Err(RidgeError::DimensionMismatch {
            context: "candidate (A, b) shape must be output_dim × input_dim and output_dim",
        });
    }
    Ok(mean_squared_residual(a, b, u, y) + lambda * a.frobenius_norm_sq())
}

/// `(1/n) Σᵢ ‖yᵢ − A·uᵢ − b‖²` for a candidate map over a dataset.
fn mean_squared_residual(a: &Matrix, b: &[f64], u: &Matrix, y: &Matrix) -> f64 {
    let n = u.rows();
    let p = u.cols();
    let q = y.cols();
    let mut total = 0.0;
    for i in 0..n {
        let u_row = u.row(i);
        let y_row = y.row(i);
        for j in 0..q {
            let a_row = a.row(j);
            let mut pred = b[j];
            for k in 0..p {
                pred += a_row[k] * u_row[k];
            }
            let r = y_row[j] - pred;
            total += r * r;
        }
    }
    total / n as f64
}
