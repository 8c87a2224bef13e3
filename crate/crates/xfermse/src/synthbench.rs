//! Deterministic synthetic transfer benchmark.
//!
//! Real transfer experiments need trained networks; this module replaces
//! them with a seeded family of related regression tasks whose ground-truth
//! transfer quality is controlled by construction, so estimator-vs-actual
//! relationships can be measured reproducibly on a laptop in seconds.
//!
//! # Construction
//!
//! A family draws standard-normal inputs `x ∈ ℝ^d` and a shared latent map
//! `P` (k × d, where k = max(d_s, d_t)); every task's ground truth is affine
//! in the latent code `P·x`. Each **source** `i` gets:
//!
//! - probe directions `Q_i = a_i·P + (1 − a_i)·G_i`, a blend of the shared
//!   latent map with a private random map `G_i`. The blend weight `a_i` is
//!   the source's *effective alignment*, spread deterministically around the
//!   family's `alignment` parameter (see below), so sources form a quality
//!   ladder from well-aligned to poorly aligned;
//! - a frozen feature extractor: a one-layer rectifier network whose first
//!   units come in **paired form** `max(0, q·x + c)` and `max(0, −q·x − c)`.
//!   The pair's difference reproduces `q·x + c` exactly, so anything affine
//!   in the probe directions is exactly recoverable by a linear head on the
//!   features — at full alignment the target task becomes exactly
//!   realizable, which pins the benchmark's noiseless floor at zero. The
//!   remaining units are ordinary rectifiers with random directions;
//! - a linear head fit by unregularized ridge on the source's own labeled
//!   data (its labels are affine in `Q_i·x` plus noise), giving the frozen
//!   source model whose predictions are the *dummy labels*;
//! - source labels drawn on the **shared** training inputs as well, for the
//!   shared-inputs score, along with the source model's loss against them.
//!
//! Each **target** `j` is an affine map of the shared latent code plus
//! Gaussian observation noise, with one train and one test split common to
//! all targets. Transfer quality therefore varies with the source's
//! effective alignment, and every quantity the estimators and verifiers need
//! (features, dummy labels, shared labels, source losses) falls out of the
//! construction with its preconditions satisfied exactly.
//!
//! # Effective alignment ladder
//!
//! Source `i` of `s` uses `a_i = alignment^(e_i)` with exponents `e_i`
//! evenly spaced in `[1/2, 2]`. Both endpoints are fixed points: alignment 1
//! keeps every source perfectly aligned (realizable targets), alignment 0
//! keeps every source unaligned. In between, sources spread out so that
//! correlation and selection statistics have genuine signal to find.
//!
//! # Determinism
//!
//! Every random object draws from its own substream derived from
//! `(seed, tag, index)` via [`crate::rng::subseed`], so results are
//! bitwise-reproducible regardless of evaluation order or worker count.
//! Pair evaluation in [`run_benchmark`] is parallel (capped by the
//! `XFERMSE_THREADS` environment variable) and assembles results in pair
//! order, so the output is identical for any thread count.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::estimators::{
    self, check_label_score_bound, check_shared_score_bound, EstimatorError, LabelBoundCheck,
    Method, SharedBoundCheck,
};
use crate::evalmetrics::{self, CorrelationReport, MetricError, MetricKind};
use crate::numkit::Matrix;
use crate::ridge::{self, RidgeError, RidgeSolution};
use crate::rng::{subseed, Rng};

/// Shape and noise parameters of a synthetic task family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    /// Root seed; equal specs with equal seeds generate bitwise-identical
    /// families.
    pub seed: u64,
    /// Training samples per task (shared inputs across targets).
    pub n_train: usize,
    /// Held-out test samples.
    pub n_test: usize,
    /// Input dimension `d`.
    pub input_dim: usize,
    /// Feature (extractor output) dimension `d_r`.
    pub feature_dim: usize,
    /// Source label dimension `d_s`.
    pub source_label_dim: usize,
    /// Target label dimension `d_t`.
    pub target_label_dim: usize,
    /// Standard deviation of the Gaussian label noise on every task.
    pub noise_std: f64,
    /// Family alignment in `[0, 1]`: how much of the shared latent map the
    /// sources' probe directions carry. 1 makes every target exactly
    /// realizable from every source's features; 0 decouples them.
    pub alignment: f64,
}

impl Default for TaskSpec {
    /// The default benchmark configuration: 2000 training and 1000 test
    /// samples, 16 → 64 feature lift, 2-dimensional labels on both sides,
    /// noise 0.05, alignment 0.5.
    fn default() -> Self {
        TaskSpec {
            seed: 7,
            n_train: 2000,
            n_test: 1000,
            input_dim: 16,
            feature_dim: 64,
            source_label_dim: 2,
            target_label_dim: 2,
            noise_std: 0.05,
            alignment: 0.5,
        }
    }
}

impl TaskSpec {
    fn validate(&self) -> Result<(), BenchError> {
        let fail = |reason: String| Err(BenchError::BadSpec { reason });
        if self.n_train < 1 || self.n_test < 1 {
            return fail("n_train and n_test must be at least 1".into());
        }
        if self.input_dim < 1
            || self.feature_dim < 1
            || self.source_label_dim < 1
            || self.target_label_dim < 1
        {
            return fail("all dimensions must be at least 1".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return fail(format!("noise_std must be finite and >= 0, got {}", self.noise_std));
        }
        if !(0.0..=1.0).contains(&self.alignment) {
            return fail(format!("alignment must lie in [0, 1], got {}", self.alignment));
        }
        Ok(())
    }
}

/// Errors from benchmark generation and execution.
#[derive(Debug, Clone, PartialEq)]
pub enum BenchError {
    /// A TaskSpec invariant failed.
    BadSpec { reason: String },
    /// A run configuration (λ grid, methods, subset sizes, counts) is
    /// invalid.
    BadConfig { reason: String },
    /// A source id outside `0..n_sources`.
    UnknownSource { id: usize, count: usize },
    /// A target id outside `0..n_targets`.
    UnknownTarget { id: usize, count: usize },
    /// Propagated regression failure.
    Ridge(RidgeError),
    /// Propagated estimator failure.
    Estimator(EstimatorError),
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::BadSpec { reason } => write!(f, "invalid task spec: {reason}"),
            BenchError::BadConfig { reason } => write!(f, "invalid benchmark config: {reason}"),
            BenchError::UnknownSource { id, count } => {
                write!(f, "source id {id} out of range (family has {count} sources)")
            }
            BenchError::UnknownTarget { id, count } => {
                write!(f, "target id {id} out of range (family has {count} targets)")
            }
            BenchError::Ridge(e) => write!(f, "{e}"),
            BenchError::Estimator(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<RidgeError> for BenchError {
    fn from(e: RidgeError) -> Self {
        BenchError::Ridge(e)
    }
}

impl From<EstimatorError> for BenchError {
    fn from(e: EstimatorError) -> Self {
        BenchError::Estimator(e)
    }
}

/// A frozen one-layer rectifier feature extractor.
#[derive(Debug, Clone)]
pub struct Extractor {
    /// Unit weights, one row per feature.
    weights: Matrix,
    /// Unit offsets.
    offsets: Vec<f64>,
}

impl Extractor {
    /// Applies the extractor to inputs (`n × d`), producing features
    /// (`n × d_r`): entry `(i, u) = max(0, w_u·x_i + c_u)`.
    pub fn apply(&self, inputs: &Matrix) -> Matrix {
        let n = inputs.rows();
        let d_r = self.weights.rows();
        let mut out = Matrix::zeros(n, d_r);
        for i in 0..n {
            let x = inputs.row(i);
            let row = out.row_mut(i);
            for u in 0..d_r {
                let w = self.weights.row(u);
                let mut acc = self.offsets[u];
                for k in 0..x.len() {
                    acc += w[k] * x[k];
                }
                row[u] = acc.max(0.0);
            }
        }
        out
    }
}

/// One frozen source model plus everything derived from it once per family.
#[derive(Debug, Clone)]
struct SourceTask {
    extractor: Extractor,
    /// Linear head fit on the source's own data (the frozen source model's
    /// output layer).
    head: RidgeSolution,
    /// The head's training loss on the source's own data.
    source_fit_loss: f64,
    /// Effective alignment of this source's probe directions.
    effective_alignment: f64,
    /// True source labels drawn on the shared training inputs.
    shared_labels_train: Matrix,
    /// Mean squared error of the frozen source model against
    /// `shared_labels_train` on the shared training inputs.
    shared_source_loss: f64,
    /// Cached features of the shared training inputs.
    features_train: Matrix,
    /// Cached features of the shared test inputs.
    features_test: Matrix,
    /// Cached source-model predictions (dummy labels) on the shared
    /// training inputs.
    dummy_train: Matrix,
}

/// One target task: labels on the shared splits.
#[derive(Debug, Clone)]
struct TargetTask {
    labels_train: Matrix,
    labels_test: Matrix,
}

/// A generated family of source and target tasks.
#[derive(Debug, Clone)]
pub struct TaskFamily {
    spec: TaskSpec,
    sources: Vec<SourceTask>,
    targets: Vec<TargetTask>,
    x_train: Matrix,
    x_test: Matrix,
}

fn normal_matrix(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(rng.next_normal() * scale);
    }
    Matrix::from_vec(rows, cols, data).expect("normal draws are always finite")
}

/// `inputs·latentᵀ·mapᵀ + offset (+ noise)`: evaluates an affine function of
/// the latent code on every input row.
fn affine_of_latent(
    inputs: &Matrix,
    latent: &Matrix,
    map: &Matrix,
    offset: &[f64],
    noise_std: f64,
    noise_rng: &mut Rng,
) -> Matrix {
    let n = inputs.rows();
    let k = latent.rows();
    let q = map.rows();
    let mut out = Matrix::zeros(n, q);
    let mut code = vec![0.0; k];
    for i in 0..n {
        let x = inputs.row(i);
        for (c, code_slot) in code.iter_mut().enumerate() {
            let l_row = latent.row(c);
            let mut acc = 0.0;
            for j in 0..x.len() {
                acc += l_row[j] * x[j];
            }
            *code_slot = acc;
        }
        let row = out.row_mut(i);
        for o in 0..q {
            let m_row = map.row(o);
            let mut acc = offset[o];
            for (c, &z) in code.iter().enumerate() {
                acc += m_row[c] * z;
            }
            row[o] = acc;
        }
        if noise_std > 0.0 {
            for v in out.row_mut(i) {
                *v += noise_std * noise_rng.next_normal();
            }
        }
    }
    out
}

fn mean_squared_diff(a: &Matrix, b: &Matrix) -> f64 {
    debug_assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    let mut total = 0.0;
    for (x, y) in a.data().iter().zip(b.data().iter()) {
        let d = x - y;
        total += d * d;
    }
    total / a.rows() as f64
}

/// Generates a family of `n_sources × n_targets` tasks deterministically
/// from the spec's seed.
pub fn generate_task_family(
    spec: &TaskSpec,
    n_sources: usize,
    n_targets: usize,
) -> Result<TaskFamily, BenchError> {
    spec.validate()?;
    if n_sources < 1 || n_targets < 1 {
        return Err(BenchError::BadConfig {
            reason: "need at least one source and one target".into(),
        });
    }
    let d = spec.input_dim;
    let d_r = spec.feature_dim;
    let d_s = spec.source_label_dim;
    let d_t = spec.target_label_dim;
    let latent_dim = d_s.max(d_t);
    // Paired rectifier units recover one probe direction each; with a narrow
    // extractor only the first latent coordinates get exact pairs.
    let n_pairs = latent_dim.min(d_r / 2);
    let seed = spec.seed;
    let input_scale = 1.0 / (d as f64).sqrt();
    let latent_scale = 1.0 / (latent_dim as f64).sqrt();

    let latent_map = normal_matrix(
        &mut Rng::new(subseed(seed, "latent-map", 0)),
        latent_dim,
        d,
        input_scale,
    );
    let x_train = normal_matrix(
        &mut Rng::new(subseed(seed, "inputs-train", 0)),
        spec.n_train,
        d,
        1.0,
    );
    let x_test = normal_matrix(
        &mut Rng::new(subseed(seed, "inputs-test", 0)),
        spec.n_test,
        d,
        1.0,
    );

    let mut sources = Vec::with_capacity(n_sources);
    for i in 0..n_sources {
        let idx = i as u64;
        // Deterministic quality ladder: exponents spread over [1/2, 2], so
        // alignment 1 and alignment 0 remain exact fixed points.
        let exponent = if n_sources == 1 {
            0.5
        } else {
            0.5 + 1.5 * i as f64 / (n_sources - 1) as f64
        };
        let effective_alignment = spec.alignment.powf(exponent);

        let private = normal_matrix(
            &mut Rng::new(subseed(seed, "source-dirs", idx)),
            latent_dim,
            d,
            input_scale,
        );
        // Probe directions: blend of the shared latent map and the private
        // one.
        let mut probes = Matrix::zeros(latent_dim, d);
        for r in 0..latent_dim {
            for c in 0..d {
                probes.set(
                    r,
                    c,
                    effective_alignment * latent_map.get(r, c)
                        + (1.0 - effective_alignment) * private.get(r, c),
                );
            }
        }

        // Extractor: paired units for the first n_pairs probe directions,
        // then free rectifier units.
        let mut unit_rng = Rng::new(subseed(seed, "extractor-units", idx));
        let mut weights = Matrix::zeros(d_r, d);
        let mut offsets = vec![0.0; d_r];
        for p in 0..n_pairs {
            let c = 0.5 * unit_rng.next_normal();
            for col in 0..d {
                weights.set(2 * p, col, probes.get(p, col));
                weights.set(2 * p + 1, col, -probes.get(p, col));
            }
            offsets[2 * p] = c;
            offsets[2 * p + 1] = -c;
        }
        for u in (2 * n_pairs)..d_r {
            for col in 0..d {
                weights.set(u, col, unit_rng.next_normal() * input_scale);
            }
            offsets[u] = 0.5 * unit_rng.next_normal();
        }
        let extractor = Extractor { weights, offsets };

        // The source's ground truth is affine in its own probe code.
        let source_map = normal_matrix(
            &mut Rng::new(subseed(seed, "source-map", idx)),
            d_s,
            latent_dim,
            latent_scale,
        );
        let mut offset_rng = Rng::new(subseed(seed, "source-offset", idx));
        let source_offset: Vec<f64> = (0..d_s).map(|_| 0.5 * offset_rng.next_normal()).collect();

        // Fit the source head on the source's own labeled data.
        let source_inputs = normal_matrix(
            &mut Rng::new(subseed(seed, "source-inputs", idx)),
            spec.n_train,
            d,
            1.0,
        );
        let mut source_noise = Rng::new(subseed(seed, "source-noise", idx));
        let source_labels = affine_of_latent(
            &source_inputs,
            &probes,
            &source_map,
            &source_offset,
            spec.noise_std,
            &mut source_noise,
        );
        let source_features = extractor.apply(&source_inputs);
        let head = ridge::ridge_fit(&source_features, &source_labels, 0.0)?;
        let source_fit_loss = head.mse_term;

        // Shared-inputs view of this source: its true labels on the common
        // training inputs, and the frozen model's loss against them.
        let features_train = extractor.apply(&x_train);
        let features_test = extractor.apply(&x_test);
        let dummy_train = ridge::predict(&head, &features_train)?;
        let mut shared_noise = Rng::new(subseed(seed, "shared-source-noise", idx));
        let shared_labels_train = affine_of_latent(
            &x_train,
            &probes,
            &source_map,
            &source_offset,
            spec.noise_std,
            &mut shared_noise,
        );
        let shared_source_loss = mean_squared_diff(&dummy_train, &shared_labels_train);

        sources.push(SourceTask {
            extractor,
            head,
            source_fit_loss,
            effective_alignment,
            shared_labels_train,
            shared_source_loss,
            features_train,
            features_test,
            dummy_train,
        });
    }

    let mut targets = Vec::with_capacity(n_targets);
    for j in 0..n_targets {
        let idx = j as u64;
        let target_map = normal_matrix(
            &mut Rng::new(subseed(seed, "target-map", idx)),
            d_t,
            latent_dim,
            latent_scale,
        );
        let mut offset_rng = Rng::new(subseed(seed, "target-offset", idx));
        let target_offset: Vec<f64> = (0..d_t).map(|_| 0.5 * offset_rng.next_normal()).collect();
        let mut train_noise = Rng::new(subseed(seed, "target-train-noise", idx));
        let labels_train = affine_of_latent(
            &x_train,
            &latent_map,
            &target_map,
            &target_offset,
            spec.noise_std,
            &mut train_noise,
        );
        let mut test_noise = Rng::new(subseed(seed, "target-test-noise", idx));
        let labels_test = affine_of_latent(
            &x_test,
            &latent_map,
            &target_map,
            &target_offset,
            spec.noise_std,
            &mut test_noise,
        );
        targets.push(TargetTask {
            labels_train,
            labels_test,
        });
    }

    Ok(TaskFamily {
        spec: *spec,
        sources,
        targets,
        x_train,
        x_test,
    })
}

impl TaskFamily {
    /// The spec the family was generated from.
    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    /// Number of source tasks.
    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    /// Number of target tasks.
    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    /// Shared training inputs (`n_train × d`).
    pub fn inputs_train(&self) -> &Matrix {
        &self.x_train
    }

    /// Shared test inputs (`n_test × d`).
    pub fn inputs_test(&self) -> &Matrix {
        &self.x_test
    }

    fn source(&self, id: usize) -> Result<&SourceTask, BenchError> {
        self.sources.get(id).ok_or(BenchError::UnknownSource {
            id,
            count: self.sources.len(),
        })
    }

    fn target(&self, id: usize) -> Result<&TargetTask, BenchError> {
        self.targets.get(id).ok_or(BenchError::UnknownTarget {
            id,
            count: self.targets.len(),
        })
    }

    /// Features of the shared training inputs under source `id`'s extractor.
    pub fn features_train(&self, id: usize) -> Result<&Matrix, BenchError> {
        Ok(&self.source(id)?.features_train)
    }

    /// Features of the shared test inputs under source `id`'s extractor.
    pub fn features_test(&self, id: usize) -> Result<&Matrix, BenchError> {
        Ok(&self.source(id)?.features_test)
    }

    /// Source `id`'s predictions (dummy labels) on the shared training
    /// inputs.
    pub fn dummy_train(&self, id: usize) -> Result<&Matrix, BenchError> {
        Ok(&self.source(id)?.dummy_train)
    }

    /// Source `id`'s true labels on the shared training inputs.
    pub fn shared_labels_train(&self, id: usize) -> Result<&Matrix, BenchError> {
        Ok(&self.source(id)?.shared_labels_train)
    }

    /// Source `id`'s frozen-model loss against its shared-input labels.
    pub fn shared_source_loss(&self, id: usize) -> Result<f64, BenchError> {
        Ok(self.source(id)?.shared_source_loss)
    }

    /// The training loss of source `id`'s head on its own source data.
    pub fn source_fit_loss(&self, id: usize) -> Result<f64, BenchError> {
        Ok(self.source(id)?.source_fit_loss)
    }

    /// Source `id`'s frozen feature extractor (for featurizing new inputs).
    pub fn extractor(&self, id: usize) -> Result<&Extractor, BenchError> {
        Ok(&self.source(id)?.extractor)
    }

    /// Source `id`'s frozen linear head (the source model's output layer).
    pub fn source_head(&self, id: usize) -> Result<&RidgeSolution, BenchError> {
        Ok(&self.source(id)?.head)
    }

    /// The effective alignment the quality ladder assigned to source `id`.
    pub fn effective_alignment(&self, id: usize) -> Result<f64, BenchError> {
        Ok(self.source(id)?.effective_alignment)
    }

    /// Target `id`'s training labels.
    pub fn target_labels_train(&self, id: usize) -> Result<&Matrix, BenchError> {
        Ok(&self.target(id)?.labels_train)
    }

    /// Target `id`'s test labels.
    pub fn target_labels_test(&self, id: usize) -> Result<&Matrix, BenchError> {
        Ok(&self.target(id)?.labels_test)
    }
}

/// Outcome of retraining a target head on a frozen source extractor.
#[derive(Debug, Clone)]
pub struct RetrainOutcome {
    /// Negative training MSE of the retrained head.
    pub train_neg_mse: f64,
    /// Negative test MSE of the retrained head on the held-out split.
    pub test_neg_mse: f64,
    /// Features of the target training inputs under the source extractor.
    pub features_train: Matrix,
    /// Features of the target test inputs under the source extractor.
    pub features_test: Matrix,
    /// Source-model predictions on the target training inputs.
    pub dummy_train: Matrix,
}

fn retrain_metrics(
    family: &TaskFamily,
    source_id: usize,
    target_id: usize,
    lambda_head: f64,
) -> Result<(f64, f64), BenchError> {
    let src = family.source(source_id)?;
    let tgt = family.target(target_id)?;
    let fit = ridge::ridge_fit(&src.features_train, &tgt.labels_train, lambda_head)?;
    let predictions = ridge::predict(&fit, &src.features_test)?;
    let test_mse = mean_squared_diff(&predictions, &tgt.labels_test);
    Ok((-fit.mse_term, -test_mse))
}

/// Freezes source `source_id`'s extractor, refits the target head on target
/// `target_id`'s training labels with `lambda_head`, and reports negative
/// train and test MSE along with the matrices the estimators consume.
pub fn head_retrain(
    family: &TaskFamily,
    source_id: usize,
    target_id: usize,
    lambda_head: f64,
) -> Result<RetrainOutcome, BenchError> {
    let (train_neg_mse, test_neg_mse) =
        retrain_metrics(family, source_id, target_id, lambda_head)?;
    let src = family.source(source_id)?;
    Ok(RetrainOutcome {
        train_neg_mse,
        test_neg_mse,
        features_train: src.features_train.clone(),
        features_test: src.features_test.clone(),
        dummy_train: src.dummy_train.clone(),
    })
}

/// One score in a pair record.
#[derive(Debug, Clone, Copy)]
pub struct ScoreEntry {
    pub method: Method,
    pub lambda: f64,
    pub value: f64,
    pub mse_term: f64,
    pub penalty_term: f64,
}

/// All computed quantities for one (source, target) pair.
#[derive(Debug, Clone)]
pub struct PairResult {
    pub source_id: usize,
    pub target_id: usize,
    /// Scores in (method, λ) order matching the run configuration.
    pub scores: Vec<ScoreEntry>,
    /// Negative training MSE of the retrained (λ = 0) target head.
    pub actual_train_neg_mse: f64,
    /// Negative held-out test MSE of the retrained target head.
    pub actual_test_neg_mse: f64,
    /// The source model's loss against its shared-input labels (constant
    /// across targets; repeated per pair for self-contained records).
    pub shared_source_loss: f64,
}

/// One correlation cell of a benchmark run.
#[derive(Debug, Clone)]
pub struct CorrelationEntry {
    pub method: Method,
    pub lambda: f64,
    pub metric: MetricKind,
    /// The correlation, when computable.
    pub report: Option<CorrelationReport>,
    /// Why the correlation is absent (degenerate input), when it is.
    pub note: Option<String>,
}

/// Full outcome of a benchmark run.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub n_sources: usize,
    pub n_targets: usize,
    /// Deduplicated λ grid, in the order given.
    pub lambdas: Vec<f64>,
    /// Deduplicated methods, in the order given.
    pub methods: Vec<Method>,
    /// Pair records in (source_id, target_id) lexicographic order.
    pub pairs: Vec<PairResult>,
    /// One entry per (method, λ, metric); empty when fewer than two pairs.
    pub correlations: Vec<CorrelationEntry>,
}

impl BenchResult {
    /// The score vector of a (method, λ) cell across pairs, in pair order.
    pub fn score_vector(&self, method: Method, lambda: f64) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|p| {
                p.scores
                    .iter()
                    .find(|s| s.method == method && s.lambda == lambda)
                    .map(|s| s.value)
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }

    /// Actual negative test MSE across pairs, in pair order.
    pub fn actual_test_vector(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.actual_test_neg_mse).collect()
    }

    /// Finds a correlation cell.
    pub fn correlation(
        &self,
        method: Method,
        lambda: f64,
        metric: MetricKind,
    ) -> Option<&CorrelationEntry> {
        self.correlations
            .iter()
            .find(|c| c.method == method && c.lambda == lambda && c.metric == metric)
    }
}

fn dedup_preserving_order<T: PartialEq + Copy>(values: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(values.len());
    for &v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn validate_run_config(lambdas: &[f64], methods: &[Method]) -> Result<(Vec<f64>, Vec<Method>), BenchError> {
    if lambdas.is_empty() {
        return Err(BenchError::BadConfig {
            reason: "need at least one lambda".into(),
        });
    }
    if methods.is_empty() {
        return Err(BenchError::BadConfig {
            reason: "need at least one method".into(),
        });
    }
    for &l in lambdas {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(BenchError::BadConfig {
                reason: format!("lambdas must be finite and >= 0, got {l}"),
            });
        }
    }
    Ok((dedup_preserving_order(lambdas), dedup_preserving_order(methods)))
}

/// Number of workers to use for `n_jobs` independent jobs: machine
/// parallelism, capped by the `XFERMSE_THREADS` environment variable when it
/// is set to a positive integer.
fn worker_count(n_jobs: usize) -> usize {
    let hardware = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("XFERMSE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(hardware);
    cap.min(n_jobs).max(1)
}

fn compute_pair(
    family: &TaskFamily,
    pair_index: usize,
    lambdas: &[f64],
    methods: &[Method],
) -> Result<PairResult, BenchError> {
    let n_targets = family.targets.len();
    let source_id = pair_index / n_targets;
    let target_id = pair_index % n_targets;
    let src = &family.sources[source_id];
    let tgt = &family.targets[target_id];

    let mut scores = Vec::with_capacity(methods.len() * lambdas.len());
    for &method in methods {
        let inputs: &Matrix = match method {
            Method::LinMse => &src.features_train,
            Method::LabMse => &src.dummy_train,
            Method::SharedLabMse => &src.shared_labels_train,
        };
        for &lambda in lambdas {
            let ts = match method {
                Method::LinMse => estimators::lin_mse(inputs, &tgt.labels_train, lambda),
                Method::LabMse => estimators::lab_mse(inputs, &tgt.labels_train, lambda),
                Method::SharedLabMse => {
                    estimators::shared_lab_mse(inputs, &tgt.labels_train, lambda)
                }
            }?;
            scores.push(ScoreEntry {
                method,
                lambda,
                value: ts.value,
                mse_term: ts.mse_term,
                penalty_term: ts.penalty_term,
            });
        }
    }
    let (actual_train_neg_mse, actual_test_neg_mse) =
        retrain_metrics(family, source_id, target_id, 0.0)?;
    Ok(PairResult {
        source_id,
        target_id,
        scores,
        actual_train_neg_mse,
        actual_test_neg_mse,
        shared_source_loss: src.shared_source_loss,
    })
}

fn correlate_pairs(
    pairs: &[PairResult],
    lambdas: &[f64],
    methods: &[Method],
) -> Vec<CorrelationEntry> {
    if pairs.len() < 2 {
        return Vec::new();
    }
    let actual: Vec<f64> = pairs.iter().map(|p| p.actual_test_neg_mse).collect();
    let mut entries = Vec::new();
    for &method in methods {
        for &lambda in lambdas {
            let scores: Vec<f64> = pairs
                .iter()
                .map(|p| {
                    p.scores
                        .iter()
                        .find(|s| s.method == method && s.lambda == lambda)
                        .expect("every pair carries every configured score")
                        .value
                })
                .collect();
            for metric in MetricKind::all() {
                let computed = match metric {
                    MetricKind::Pearson => evalmetrics::pearson(&scores, &actual),
                    MetricKind::Spearman => evalmetrics::spearman(&scores, &actual),
                    MetricKind::Kendall => evalmetrics::kendall_tau(&scores, &actual),
                };
                let (report, note) = match computed {
                    Ok(r) => (Some(r), None),
                    Err(MetricError::ConstantInput { which }) => {
                        (None, Some(format!("degenerate: {which} is constant")))
                    }
                    Err(e) => (None, Some(format!("not computed: {e}"))),
                };
                entries.push(CorrelationEntry {
                    method,
                    lambda,
                    metric,
                    report,
                    note,
                });
            }
        }
    }
    entries
}

/// Runs the full benchmark: every (source, target) pair is scored at every
/// (method, λ), the target head is retrained (λ = 0) for the actual
/// transfer outcome, and score-vs-actual correlations are assembled.
///
/// Pair evaluation is parallel; the worker count is the machine parallelism
/// capped by `XFERMSE_THREADS`. Results are deterministic for any worker
/// count.
pub fn run_benchmark(
    family: &TaskFamily,
    lambdas: &[f64],
    methods: &[Method],
) -> Result<BenchResult, BenchError> {
    let n_pairs = family.sources.len() * family.targets.len();
    run_benchmark_with_workers(family, lambdas, methods, worker_count(n_pairs))
}

/// [`run_benchmark`] with an explicit worker count (mainly for tests that
/// prove thread-count independence).
pub fn run_benchmark_with_workers(
    family: &TaskFamily,
    lambdas: &[f64],
    methods: &[Method],
    workers: usize,
) -> Result<BenchResult, BenchError> {
    let (lambdas, methods) = validate_run_config(lambdas, methods)?;
    let n_pairs = family.sources.len() * family.targets.len();
    let workers = workers.clamp(1, n_pairs.max(1));

    let mut pairs: Vec<PairResult> = Vec::with_capacity(n_pairs);
    if workers <= 1 {
        for idx in 0..n_pairs {
            pairs.push(compute_pair(family, idx, &lambdas, &methods)?);
        }
    } else {
        let next = AtomicUsize::new(0);
        let collected: Mutex<Vec<(usize, Result<PairResult, BenchError>)>> =
            Mutex::new(Vec::with_capacity(n_pairs));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    if idx >= n_pairs {
                        break;
                    }
                    let result = compute_pair(family, idx, &lambdas, &methods);
                    collected
                        .lock()
                        .expect("benchmark collector poisoned")
                        .push((idx, result));
                });
            }
        });
        let mut items = collected
            .into_inner()
            .expect("benchmark collector poisoned");
        // Deterministic assembly: pair order, not completion order.
        items.sort_by_key(|(idx, _)| *idx);
        for (_, result) in items {
            pairs.push(result?);
        }
    }

    let correlations = correlate_pairs(&pairs, &lambdas, &methods);
    Ok(BenchResult {
        n_sources: family.sources.len(),
        n_targets: family.targets.len(),
        lambdas,
        methods,
        pairs,
        correlations,
    })
}

/// Mean correlation across sweep repeats for one (size, method, λ, metric)
/// cell.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub size: usize,
    pub method: Method,
    pub lambda: f64,
    pub metric: MetricKind,
    /// Mean correlation value over the repeats where it was computable.
    pub mean_value: Option<f64>,
    /// How many repeats contributed to the mean.
    pub repeats_used: usize,
}

/// Outcome of [`small_data_sweep`].
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    /// Finds a sweep cell.
    pub fn entry(
        &self,
        size: usize,
        method: Method,
        lambda: f64,
        metric: MetricKind,
    ) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| {
            e.size == size && e.method == method && e.lambda == lambda && e.metric == metric
        })
    }
}

/// Re-runs scoring and head retraining on random training subsets of each
/// given size (`repeats` seeded draws per size), evaluating actual MSE on
/// the full test split, and averages the correlations across repeats.
///
/// Subsets are drawn as sorted index sets, so a subset of the full training
/// size reproduces [`run_benchmark`] exactly.
pub fn small_data_sweep(
    family: &TaskFamily,
    subset_sizes: &[usize],
    repeats: usize,
    lambdas: &[f64],
    methods: &[Method],
) -> Result<SweepResult, BenchError> {
    let (lambdas, methods) = validate_run_config(lambdas, methods)?;
    if subset_sizes.is_empty() {
        return Err(BenchError::BadConfig {
            reason: "need at least one subset size".into(),
        });
    }
    if repeats < 1 {
        return Err(BenchError::BadConfig {
            reason: "repeats must be at least 1".into(),
        });
    }
    let n_train = family.spec.n_train;
    for &s in subset_sizes {
        if s < 1 || s > n_train {
            return Err(BenchError::BadConfig {
                reason: format!("subset size {s} out of range 1..={n_train}"),
            });
        }
    }

    let n_sources = family.sources.len();
    let n_targets = family.targets.len();
    let n_pairs = n_sources * n_targets;
    let mut entries = Vec::new();

    for &size in subset_sizes {
        // Accumulators per (method, λ, metric) cell.
        let mut sums = vec![0.0; methods.len() * lambdas.len() * 3];
        let mut counts = vec![0usize; methods.len() * lambdas.len() * 3];

        for rep in 0..repeats {
            let draw_seed = subseed(
                subseed(family.spec.seed, "subset-size", size as u64),
                "subset-repeat",
                rep as u64,
            );
            let indices = Rng::new(draw_seed).sample_indices(n_train, size);

            // Score every pair on the subset; retrain on the subset but
            // evaluate on the full test split.
            let mut pair_scores: Vec<Vec<f64>> =
                vec![Vec::with_capacity(n_pairs); methods.len() * lambdas.len()];
            let mut actual = Vec::with_capacity(n_pairs);
            for source_id in 0..n_sources {
                let src = &family.sources[source_id];
                let sub_features = src.features_train.select_rows(&indices);
                let sub_dummy = src.dummy_train.select_rows(&indices);
                let sub_shared = src.shared_labels_train.select_rows(&indices);
                for target_id in 0..n_targets {
                    let tgt = &family.targets[target_id];
                    let sub_labels = tgt.labels_train.select_rows(&indices);
                    for (mi, &method) in methods.iter().enumerate() {
                        let inputs = match method {
                            Method::LinMse => &sub_features,
                            Method::LabMse => &sub_dummy,
                            Method::SharedLabMse => &sub_shared,
                        };
                        for (li, &lambda) in lambdas.iter().enumerate() {
                            let ts = match method {
                                Method::LinMse => {
                                    estimators::lin_mse(inputs, &sub_labels, lambda)
                                }
                                Method::LabMse => {
                                    estimators::lab_mse(inputs, &sub_labels, lambda)
                                }
                                Method::SharedLabMse => {
                                    estimators::shared_lab_mse(inputs, &sub_labels, lambda)
                                }
                            }?;
                            pair_scores[mi * lambdas.len() + li].push(ts.value);
                        }
                    }
                    let fit = ridge::ridge_fit(&sub_features, &sub_labels, 0.0)?;
                    let predictions = ridge::predict(&fit, &src.features_test)?;
                    actual.push(-mean_squared_diff(&predictions, &tgt.labels_test));
                }
            }

            if n_pairs < 2 {
                continue;
            }
            for (mi, _method) in methods.iter().enumerate() {
                for (li, _lambda) in lambdas.iter().enumerate() {
                    let scores = &pair_scores[mi * lambdas.len() + li];
                    for (ki, metric) in MetricKind::all().iter().enumerate() {
                        let computed = match metric {
                            MetricKind::Pearson => evalmetrics::pearson(scores, &actual),
                            MetricKind::Spearman => evalmetrics::spearman(scores, &actual),
                            MetricKind::Kendall => evalmetrics::kendall_tau(scores, &actual),
                        };
                        if let Ok(r) = computed {
                            let cell = (mi * lambdas.len() + li) * 3 + ki;
                            sums[cell] += r.value;
                            counts[cell] += 1;
                        }
                    }
                }
            }
        }

        for (mi, &method) in methods.iter().enumerate() {
            for (li, &lambda) in lambdas.iter().enumerate() {
                for (ki, &metric) in MetricKind::all().iter().enumerate() {
                    let cell = (mi * lambdas.len() + li) * 3 + ki;
                    entries.push(SweepEntry {
                        size,
                        method,
                        lambda,
                        metric,
                        mean_value: if counts[cell] > 0 {
                            Some(sums[cell] / counts[cell] as f64)
                        } else {
                            None
                        },
                        repeats_used: counts[cell],
                    });
                }
            }
        }
    }

    Ok(SweepResult {
        sizes: subset_sizes.to_vec(),
        repeats,
        entries,
    })
}

/// Both inequality checks for one pair at one λ.
#[derive(Debug, Clone)]
pub struct PairBoundChecks {
    pub source_id: usize,
    pub target_id: usize,
    pub lambda: f64,
    pub label_check: LabelBoundCheck,
    pub shared_check: SharedBoundCheck,
}

/// Runs both score-inequality verifiers on every pair at every λ. The
/// benchmark's construction satisfies the preconditions (dummy labels are
/// exact affine maps of features; shared losses are measured on the shared
/// inputs), so violations beyond tolerance indicate a real defect.
pub fn verify_bounds(
    family: &TaskFamily,
    lambdas: &[f64],
) -> Result<Vec<PairBoundChecks>, BenchError> {
    if lambdas.is_empty() {
        return Err(BenchError::BadConfig {
            reason: "need at least one lambda".into(),
        });
    }
    let mut checks = Vec::new();
    for (source_id, src) in family.sources.iter().enumerate() {
        for (target_id, tgt) in family.targets.iter().enumerate() {
            for &lambda in lambdas {
                let label_check = check_label_score_bound(
                    &src.features_train,
                    &src.dummy_train,
                    &tgt.labels_train,
                    lambda,
                )?;
                let shared_check = check_shared_score_bound(
                    &src.shared_labels_train,
                    &tgt.labels_train,
                    &src.features_train,
                    lambda,
                    src.shared_source_loss,
                )?;
                checks.push(PairBoundChecks {
                    source_id,
                    target_id,
                    lambda,
                    label_check,
                    shared_check,
                });
            }
        }
    }
    Ok(checks)
}
