//! Transferability scores, theoretical lower bounds, and inequality checkers.
//!
//! All three scores share one shape: the score is the **negative minimized
//! ridge objective** of a regression from some per-sample representation of
//! the source task onto the target labels. Higher (closer to zero) means the
//! source is more useful for the target. The representations differ:
//!
//! - [`lin_mse`] regresses target labels on the source model's *features*
//!   (the frozen extractor's outputs on target inputs);
//! - [`lab_mse`] regresses on *dummy labels* — the full source model's
//!   predictions on target inputs — which compresses the features down to
//!   the source label dimension and is therefore much cheaper;
//! - [`shared_lab_mse`] regresses target labels directly on the *true source
//!   labels* when the two tasks label the same inputs.
//!
//! On top of the scores, this module provides:
//!
//! - [`complexity_term`] and the two transfer lower bounds, which turn a
//!   score into a distribution-level guarantee: the expected negative test
//!   error of the transferred-and-retrained model is at least the score
//!   minus a capacity penalty shrinking as `1/√n`;
//! - [`check_label_score_bound`] and [`check_shared_score_bound`], which test
//!   the two underlying inequalities numerically on concrete data — the
//!   dummy-label score never exceeds the negative retrained-head training
//!   loss, and the shared-inputs score is controlled by half that loss plus
//!   a source-quality correction;
//! - [`generalization_gap`], the diagnostic comparing a score against the
//!   transferred model's achieved negative test error.

use std::fmt;

use crate::numkit::Matrix;
use crate::ridge::{self, RidgeError};

/// Slack allowed when checking the score inequalities; everything beyond
/// this is reported as a genuine violation.
pub const BOUND_TOL: f64 = 1e-10;

/// Which regression the score is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Target labels regressed on source features.
    LinMse,
    /// Target labels regressed on the source model's predictions.
    LabMse,
    /// Target labels regressed on true source labels over shared inputs.
    SharedLabMse,
}

impl Method {
    /// Stable lowercase token used in CLI flags and JSON output.
    pub fn token(&self) -> &'static str {
        match self {
            Method::LinMse => "linmse",
            Method::LabMse => "labmse",
            Method::SharedLabMse => "sharedlab",
        }
    }

    /// All methods, in token order.
    pub fn all() -> [Method; 3] {
        [Method::LabMse, Method::LinMse, Method::SharedLabMse]
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::LinMse => "LinMSE",
            Method::LabMse => "LabMSE",
            Method::SharedLabMse => "SharedLabMSE",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linmse" => Ok(Method::LinMse),
            "labmse" => Ok(Method::LabMse),
            "sharedlab" => Ok(Method::SharedLabMse),
            other => Err(format!(
                "unknown method '{other}' (expected linmse, labmse, or sharedlab)"
            )),
        }
    }
}

/// A computed transferability score with its provenance.
#[derive(Debug, Clone)]
pub struct TransferScore {
    /// Which regression produced the score.
    pub method: Method,
    /// Regularization weight used.
    pub lambda: f64,
    /// The score: negative minimized objective. Always ≤ 0.
    pub value: f64,
    /// Number of samples scored on.
    pub n: usize,
    /// Regression input width (feature, dummy-label, or source-label dim).
    pub input_dim: usize,
    /// Target label dimension.
    pub output_dim: usize,
    /// Mean-squared-error part of the minimized objective.
    pub mse_term: f64,
    /// `λ‖A‖_F²` part of the minimized objective.
    pub penalty_term: f64,
}

/// Parameters of the capacity term in the transfer lower bounds: the source
/// model is a rectifier network of `l` hidden layers on `d`-dimensional
/// inputs, with at most `h` hidden nodes and parameter norm at most `m` per
/// layer; `d_t` is the target label dimension, `delta` the confidence level,
/// and `n` the sample count the bound is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexitySpec {
    pub d: usize,
    pub d_t: usize,
    pub m: f64,
    pub h: usize,
    pub l: usize,
    pub delta: f64,
    pub n: usize,
}

/// Errors from score and bound computation.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorError {
    /// Propagated regression failure (dimensions, non-finite data, λ < 0).
    Ridge(RidgeError),
    /// A ComplexitySpec invariant failed.
    BadSpec { reason: String },
    /// A bound was asked of a score computed by the wrong method.
    MethodMismatch { expected: Method, found: Method },
    /// The spec's sample count disagrees with the score's.
    SampleCountMismatch { spec_n: usize, score_n: usize },
    /// An argument that must be nonnegative was negative or non-finite.
    NegativeArgument { name: &'static str, value: f64 },
}

impl fmt::Display for EstimatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorError::Ridge(e) => write!(f, "{e}"),
            EstimatorError::BadSpec { reason } => write!(f, "invalid complexity spec: {reason}"),
            EstimatorError::MethodMismatch { expected, found } => {
                write!(f, "bound requires a {expected} score, got {found}")
            }
            EstimatorError::SampleCountMismatch { spec_n, score_n } => write!(
                f,
                "spec sample count {spec_n} does not match score sample count {score_n}"
            ),
            EstimatorError::NegativeArgument { name, value } => {
                write!(f, "{name} must be a finite value >= 0, got {value}")
            }
        }
    }
}

impl std::error::Error for EstimatorError {}

impl From<RidgeError> for EstimatorError {
    fn from(e: RidgeError) -> Self {
        EstimatorError::Ridge(e)
    }
}

fn score_with(
    method: Method,
    inputs: &Matrix,
    targets: &Matrix,
    lambda: f64,
) -> Result<TransferScore, EstimatorError> {
    let fit = ridge::ridge_fit(inputs, targets, lambda)?;
    Ok(TransferScore {
        method,
        lambda,
        value: -(fit.mse_term + fit.penalty_term),
        n: fit.n,
        input_dim: fit.input_dim(),
        output_dim: fit.output_dim(),
        mse_term: fit.mse_term,
        penalty_term: fit.penalty_term,
    })
}

/// Feature-based score: negative minimized ridge objective of regressing
/// `targets` (n × d_t) on `features` (n × d_r).
pub fn lin_mse(
    features: &Matrix,
    targets: &Matrix,
    lambda: f64,
) -> Result<TransferScore, EstimatorError> {
    score_with(Method::LinMse, features, targets, lambda)
}

/// Dummy-label score: same regression with the source model's predictions
/// `dummy_labels` (n × d_s) as inputs. Usually far cheaper than [`lin_mse`]
/// because d_s ≪ d_r.
pub fn lab_mse(
    dummy_labels: &Matrix,
    targets: &Matrix,
    lambda: f64,
) -> Result<TransferScore, EstimatorError> {
    score_with(Method::LabMse, dummy_labels, targets, lambda)
}

/// Shared-inputs score: regression of target labels on the true source
/// labels of the same inputs.
pub fn shared_lab_mse(
    source_labels: &Matrix,
    target_labels: &Matrix,
    lambda: f64,
) -> Result<TransferScore, EstimatorError> {
    score_with(Method::SharedLabMse, source_labels, target_labels, lambda)
}

fn validate_spec(spec: &ComplexitySpec) -> Result<(), EstimatorError> {
    let fail = |reason: &str| {
        Err(EstimatorError::BadSpec {
            reason: reason.to_string(),
        })
    };
    if spec.d < 1 || spec.d_t < 1 || spec.h < 1 || spec.l < 1 || spec.n < 1 {
        return fail("d, d_t, H, L, and n must all be at least 1");
    }
    if !(spec.m >= 1.0 && spec.m.is_finite()) {
        return fail("M must be a finite value >= 1");
    }
    if !(spec.delta > 0.0 && spec.delta < 4.0) {
        return fail("delta must lie strictly between 0 and 4");
    }
    Ok(())
}

/// The capacity term
/// `C = 16·M^(2L+2)·H^(2L)·[d_t²·d·√(L+1+ln d) + d_t·d²·√(2·ln(4/δ))]`.
///
/// Strictly positive for every valid spec; grows polynomially in the
/// dimensions and exponentially in depth, and shrinks as δ grows toward 4.
pub fn complexity_term(spec: &ComplexitySpec) -> Result<f64, EstimatorError> {
    validate_spec(spec)?;
    let d = spec.d as f64;
    let d_t = spec.d_t as f64;
    let h = spec.h as f64;
    let l = spec.l as f64;
    let depth_factor = spec.m.powi(2 * spec.l as i32 + 2) * h.powi(2 * spec.l as i32);
    let dim_term = d_t * d_t * d * (l + 1.0 + d.ln()).sqrt()
        + d_t * d * d * (2.0 * (4.0 / spec.delta).ln()).sqrt();
    Ok(16.0 * depth_factor * dim_term)
}

/// Lower bound on expected transfer performance from a dummy-label score
/// value: `value − C/√n`.
pub fn label_transfer_lower_bound(
    score_value: f64,
    spec: &ComplexitySpec,
) -> Result<f64, EstimatorError> {
    let c = complexity_term(spec)?;
    Ok(score_value - c / (spec.n as f64).sqrt())
}

/// Lower bound on expected transfer performance from a shared-inputs score
/// value: `2·value − 2·a_norm_sq·source_loss − C/√n`, where `a_norm_sq` is
/// the squared Frobenius norm of the fitted source→target map and
/// `source_loss` is the source model's empirical loss.
pub fn shared_transfer_lower_bound(
    score_value: f64,
    a_norm_sq: f64,
    source_loss: f64,
    spec: &ComplexitySpec,
) -> Result<f64, EstimatorError> {
    if !(a_norm_sq >= 0.0 && a_norm_sq.is_finite()) {
        return Err(EstimatorError::NegativeArgument {
            name: "a_norm_sq",
            value: a_norm_sq,
        });
    }
    if !(source_loss >= 0.0 && source_loss.is_finite()) {
        return Err(EstimatorError::NegativeArgument {
            name: "source_loss",
            value: source_loss,
        });
    }
    let c = complexity_term(spec)?;
    Ok(2.0 * score_value - 2.0 * a_norm_sq * source_loss - c / (spec.n as f64).sqrt())
}

impl TransferScore {
    /// Typed wrapper for [`label_transfer_lower_bound`]: requires a
    /// [`Method::LabMse`] score whose sample count matches the spec.
    pub fn transfer_lower_bound(&self, spec: &ComplexitySpec) -> Result<f64, EstimatorError> {
        if self.method != Method::LabMse {
            return Err(EstimatorError::MethodMismatch {
                expected: Method::LabMse,
                found: self.method,
            });
        }
        if self.n != spec.n {
            return Err(EstimatorError::SampleCountMismatch {
                spec_n: spec.n,
                score_n: self.n,
            });
        }
        label_transfer_lower_bound(self.value, spec)
    }

    /// Typed wrapper for [`shared_transfer_lower_bound`]: requires a
    /// [`Method::SharedLabMse`] score whose sample count matches the spec.
    pub fn shared_transfer_lower_bound(
        &self,
        a_norm_sq: f64,
        source_loss: f64,
        spec: &ComplexitySpec,
    ) -> Result<f64, EstimatorError> {
        if self.method != Method::SharedLabMse {
            return Err(EstimatorError::MethodMismatch {
                expected: Method::SharedLabMse,
                found: self.method,
            });
        }
        if self.n != spec.n {
            return Err(EstimatorError::SampleCountMismatch {
                spec_n: spec.n,
                score_n: self.n,
            });
        }
        shared_transfer_lower_bound(self.value, a_norm_sq, source_loss, spec)
    }
}

/// Result of checking the dummy-label score inequality on concrete data.
#[derive(Debug, Clone)]
pub struct LabelBoundCheck {
    /// The dummy-label score at the requested λ.
    pub lab_score: f64,
    /// Negative training loss of the retrained (unregularized) target head
    /// on the features — the quantity the score must not exceed.
    pub neg_target_loss: f64,
    /// `neg_target_loss − lab_score`; nonnegative up to [`BOUND_TOL`] when
    /// the preconditions hold.
    pub gap: f64,
    /// Whether the inequality held within tolerance.
    pub holds: bool,
    /// λ the score side was computed with.
    pub lambda: f64,
}

/// Verifies that the dummy-label score is a lower bound on the negative
/// training loss of the retrained target head:
/// `lab_mse(dummy, targets, λ) ≤ −loss(head on features)` for every λ ≥ 0.
///
/// The inequality is guaranteed when the dummy labels are an exact affine
/// map of the features — which holds by construction when they are a linear
/// source head's predictions on those features.
pub fn check_label_score_bound(
    features: &Matrix,
    dummy_labels: &Matrix,
    targets: &Matrix,
    lambda: f64,
) -> Result<LabelBoundCheck, EstimatorError> {
    let lab = lab_mse(dummy_labels, targets, lambda)?;
    let head_fit = ridge::ridge_fit(features, targets, 0.0)?;
    let neg_target_loss = -head_fit.mse_term;
    let gap = neg_target_loss - lab.value;
    Ok(LabelBoundCheck {
        lab_score: lab.value,
        neg_target_loss,
        gap,
        holds: gap >= -BOUND_TOL,
        lambda,
    })
}

/// Result of checking the shared-inputs score inequality on concrete data.
#[derive(Debug, Clone)]
pub struct SharedBoundCheck {
    /// The shared-inputs score at the requested λ.
    pub shared_score: f64,
    /// The bound's right-hand side:
    /// `−(target head loss)/2 + ‖A‖_F²·source_loss`.
    pub rhs: f64,
    /// `rhs − shared_score`; nonnegative up to [`BOUND_TOL`] when the
    /// preconditions hold.
    pub gap: f64,
    /// Whether the inequality held within tolerance.
    pub holds: bool,
    /// Squared Frobenius norm of the fitted source→target map.
    pub a_norm_sq: f64,
    /// λ the score side was computed with.
    pub lambda: f64,
}

/// Verifies the shared-inputs score inequality
/// `shared_lab_mse(y_s, y_t, λ) ≤ −loss(head on features)/2 + ‖A‖_F²·source_loss`
/// where the head is the unregularized linear fit of targets on features,
/// `A` is the fitted source→target map at λ, and `source_loss` is the source
/// model's mean squared error against `source_labels` on these same inputs.
///
/// All matrices must describe the same rows (shared inputs). The inequality
/// is guaranteed when the source model's predictions on these inputs are an
/// exact affine map of the features (a linear source head), whatever the
/// residual between those predictions and `source_labels` is — that residual
/// is exactly what `source_loss` measures.
pub fn check_shared_score_bound(
    source_labels: &Matrix,
    target_labels: &Matrix,
    features: &Matrix,
    lambda: f64,
    source_loss: f64,
) -> Result<SharedBoundCheck, EstimatorError> {
    if !(source_loss >= 0.0 && source_loss.is_finite()) {
        return Err(EstimatorError::NegativeArgument {
            name: "source_loss",
            value: source_loss,
        });
    }
    let shared_fit = ridge::ridge_fit(source_labels, target_labels, lambda)?;
    let shared_score = -(shared_fit.mse_term + shared_fit.penalty_term);
    let a_norm_sq = shared_fit.a.frobenius_norm_sq();
    let head_fit = ridge::ridge_fit(features, target_labels, 0.0)?;
    let rhs = -head_fit.mse_term / 2.0 + a_norm_sq * source_loss;
    let gap = rhs - shared_score;
    Ok(SharedBoundCheck {
        shared_score,
        rhs,
        gap,
        holds: shared_score <= rhs + BOUND_TOL,
        a_norm_sq,
        lambda,
    })
}

/// A score compared against the transferred model's achieved performance.
#[derive(Debug, Clone, Copy)]
pub struct GapReport {
    /// `actual_neg_mse − score`; positive when the score under-promises.
    pub gap: f64,
    /// `|score| / gap` when the gap is positive; undefined otherwise.
    pub ratio: Option<f64>,
}

/// Compares a transferability score with the actual negative MSE achieved by
/// the transferred model.
pub fn generalization_gap(score: &TransferScore, actual_neg_mse: f64) -> GapReport {
    let gap = actual_neg_mse - score.value;
    let ratio = if gap > 0.0 {
        Some(score.value.abs() / gap)
    } else {
        None
    };
    GapReport { gap, ratio }
}
