//! Transferability scoring for regression tasks.
//!
//! This crate estimates how well a model trained on one regression task will
//! transfer to another, *before* any fine-tuning is run. All scores reduce to
//! exact ridge regressions from source features (or source predictions) to
//! target labels, so every number is reproducible to the last bit: there is
//! no stochastic training anywhere in the scoring path.
//!
//! # What's in the box
//!
//! - [`numkit`] — the small dense linear-algebra layer everything else sits
//!   on: a row-major matrix type, Gram matrices, and a symmetric
//!   positive-(semi)definite solver with a pseudo-inverse fallback.
//! - [`ridge`] — exact multi-output ridge regression with an unpenalized
//!   intercept, plus the objective decomposition used by the scores.
//! - [`estimators`] — the three transferability scores (feature-based,
//!   dummy-label, and shared-input label scores), the theoretical
//!   lower bounds on transfer performance, and the inequality checkers that
//!   verify the theory numerically on real data.
//! - [`evalmetrics`] — the statistics used to judge an estimator against
//!   observed transfer results: Pearson/Spearman/Kendall correlations,
//!   top-k source-selection matching rate, and linear-fit RMSE.
//! - [`synthbench`] — a fully deterministic synthetic transfer benchmark:
//!   a seeded family of related regression tasks with known ground-truth
//!   transfer quality.
//! - [`rng`] — the tiny seeded generator (SplitMix64 + Box–Muller) that makes
//!   the benchmark reproducible across platforms.
//! - [`cli`] — the command layer behind the `xfermse` binary: matrix file
//!   I/O (CSV and a little binary format), stable JSON output, and one
//!   function per subcommand.
//!
//! # Quick taste
//!
//! ```
//! use xfermse::numkit::Matrix;
//! use xfermse::estimators::{lin_mse, Method};
//!
//! // Four samples of 2-D source features and 1-D target labels.
//! let features = Matrix::from_rows(&[
//!     vec![0.0, 1.0],
//!     vec![1.0, 0.0],
//!     vec![1.0, 1.0],
//!     vec![0.0, 0.0],
//! ]);
//! let labels = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![1.0], vec![0.0]]);
//!
//! let score = lin_mse(&features, &labels, 1.0).unwrap();
//! assert_eq!(score.method, Method::LinMse);
//! // Scores are negated objectives: larger (closer to zero) is better.
//! assert!(score.value < 0.0);
//! assert!((score.value + score.mse_term + score.penalty_term).abs() < 1e-12);
//! ```
//!
//! The `examples/` directory of this crate is the primary tour: each file is
//! a small runnable program exercising one capability end to end.

pub mod cli;
pub mod estimators;
pub mod evalmetrics;
pub mod numkit;
pub mod ridge;
pub mod rng;
pub mod synthbench;

pub use estimators::{lab_mse, lin_mse, shared_lab_mse, Method, TransferScore};
pub use numkit::Matrix;
pub use ridge::{ridge_fit, RidgeSolution};
