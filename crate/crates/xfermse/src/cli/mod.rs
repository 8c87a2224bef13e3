//! Command-line front end.
//!
//! Five subcommands over the library: `score` (one transferability score
//! from matrix files), `correlate` (rank/linear agreement between score and
//! outcome vectors), `select-source` (top-k source-selection quality),
//! `bound` (the theoretical lower-bound calculator), and `bench` (the
//! deterministic synthetic benchmark). Reports are JSON on standard output
//! (or `--out <path>`), with a `schema_version` field and byte-stable
//! rendering: fixed field order and 17-significant-digit floats, so equal
//! inputs produce byte-identical reports.
//!
//! Exit codes: `0` success, `2` file/format/configuration errors, `3`
//! dimension mismatches and out-of-range `k`, `4` degenerate correlation
//! inputs (constant vectors), `5` a verified inequality was violated
//! (`bench --check-lemmas`). Diagnostics go to standard error.
//!
//! Timing: `score`, `correlate`, `select-source`, and `bound` report the
//! compute phase's wall-clock milliseconds (`compute_ms`, excluding file
//! I/O) in the JSON. `bench` prints its timing to standard error instead:
//! its report must be byte-identical across runs with equal flags, which a
//! timing field would break.

pub mod json;
pub mod matfile;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::estimators::{
    self, complexity_term, label_transfer_lower_bound, shared_transfer_lower_bound,
    ComplexitySpec, EstimatorError, Method,
};
use crate::evalmetrics::{
    kendall_tau, pearson, spearman, top_k_matching_rate, CorrelationReport, MetricError,
    MetricKind, TopKReport,
};
use crate::ridge::RidgeError;
use crate::synthbench::{
    generate_task_family, run_benchmark, small_data_sweep, verify_bounds, BenchError, BenchResult,
    PairBoundChecks, SweepResult, TaskSpec,
};
use json::Json;
use matfile::{read_matrix, HeaderMode, LoadedMatrix, MatFileError};

/// Version stamped into every JSON report's `schema_version`.
pub const SCHEMA_VERSION: u64 = 1;

/// Crate version stamped into every JSON report's `tool_version`.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A command failure carrying its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// File, format, or configuration problem (exit 2).
    Config(String),
    /// Dimension mismatch or out-of-range `k` (exit 3).
    Dimension(String),
    /// Degenerate correlation input (exit 4).
    Degenerate(String),
    /// A verified inequality was violated (exit 5).
    BoundViolated(String),
}

impl CliError {
    /// The process exit code this failure maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Dimension(_) => 3,
            CliError::Degenerate(_) => 4,
            CliError::BoundViolated(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m)
            | CliError::Dimension(m)
            | CliError::Degenerate(m)
            | CliError::BoundViolated(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<MatFileError> for CliError {
    fn from(e: MatFileError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn ridge_error(e: &RidgeError) -> CliError {
    match e {
        RidgeError::DimensionMismatch { .. } | RidgeError::Empty => {
            CliError::Dimension(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

fn estimator_error(e: EstimatorError) -> CliError {
    match e {
        EstimatorError::Ridge(r) => ridge_error(&r),
        other => CliError::Config(other.to_string()),
    }
}

fn metric_error(e: MetricError) -> CliError {
    match e {
        MetricError::ConstantInput { .. } => CliError::Degenerate(e.to_string()),
        MetricError::NonFinite => CliError::Config(e.to_string()),
        other => CliError::Dimension(other.to_string()),
    }
}

fn bench_error(e: BenchError) -> CliError {
    match e {
        BenchError::Ridge(r) => ridge_error(&r),
        BenchError::Estimator(est) => estimator_error(est),
        other => CliError::Config(other.to_string()),
    }
}

/// Transferability scores for regression tasks.
#[derive(Parser, Debug)]
#[command(
    name = "xfermse",
    version,
    about = "Transferability scores for regression tasks",
    subcommand_required = true,
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute one transferability score from two matrix files.
    Score(ScoreArgs),
    /// Correlate estimator scores with actual transfer outcomes.
    Correlate(CorrelateArgs),
    /// Evaluate top-k source selection against actual outcomes.
    SelectSource(SelectSourceArgs),
    /// Evaluate the theoretical transferability lower bound.
    Bound(BoundArgs),
    /// Run the deterministic synthetic transfer benchmark.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct HeaderFlags {
    /// Treat the first CSV row as a header even if it parses as numbers.
    #[arg(long, conflicts_with = "no_header")]
    header: bool,
    /// Treat the first CSV row as data (error if it has non-numeric cells).
    #[arg(long)]
    no_header: bool,
}

impl HeaderFlags {
    fn mode(self) -> HeaderMode {
        if self.header {
            HeaderMode::Header
        } else if self.no_header {
            HeaderMode::NoHeader
        } else {
            HeaderMode::Auto
        }
    }
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Score to compute: linmse, labmse, or sharedlab.
    #[arg(long)]
    method: Method,
    /// Ridge penalty strength λ (≥ 0).
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Input matrix file: features (linmse), source-model predictions
    /// (labmse), or source labels on the shared inputs (sharedlab).
    #[arg(long)]
    inputs: PathBuf,
    /// Target label matrix file (same row count as --inputs).
    #[arg(long)]
    targets: PathBuf,
    #[command(flatten)]
    header: HeaderFlags,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Which correlation metrics to compute.
#[derive(Debug, Clone, Copy)]
enum MetricChoice {
    All,
    One(MetricKind),
}

impl FromStr for MetricChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("all") {
            Ok(MetricChoice::All)
        } else {
            MetricKind::from_str(s).map(MetricChoice::One)
        }
    }
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    /// Estimator score vector (single-column or single-row matrix file).
    #[arg(long)]
    scores: PathBuf,
    /// Actual outcome vector (single-column or single-row matrix file).
    #[arg(long)]
    actuals: PathBuf,
    /// Metric: pearson, spearman, kendall, or all.
    #[arg(long, default_value = "all")]
    metric: MetricChoice,
    #[command(flatten)]
    header: HeaderFlags,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelectSourceArgs {
    /// Estimator score matrix file (sources × targets).
    #[arg(long)]
    scores: PathBuf,
    /// Actual outcome matrix file (same shape).
    #[arg(long)]
    actuals: PathBuf,
    /// Top-k cutoff; repeat the flag for several values.
    #[arg(long = "k", default_value = "1")]
    k: Vec<usize>,
    #[command(flatten)]
    header: HeaderFlags,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// The score the guarantee is evaluated for.
    #[arg(long, allow_negative_numbers = true)]
    score: f64,
    /// Input dimension d.
    #[arg(long)]
    d: usize,
    /// Target label dimension.
    #[arg(long)]
    dt: usize,
    /// Per-layer parameter magnitude cap (≥ 1).
    #[arg(long = "M")]
    m: f64,
    /// Per-layer width cap (≥ 1).
    #[arg(long = "H")]
    h: usize,
    /// Feature-extractor depth (≥ 1).
    #[arg(long = "L")]
    l: usize,
    /// Confidence parameter δ ∈ (0, 4); the probabilistic statement needs
    /// δ ≤ 1, larger values are for sensitivity exploration.
    #[arg(long)]
    delta: f64,
    /// Sample count the score was computed on.
    #[arg(long)]
    n: usize,
    /// Evaluate the shared-inputs bound instead of the label bound.
    #[arg(long)]
    shared: bool,
    /// Squared Frobenius norm of the score's optimal map (shared bound).
    #[arg(long, allow_negative_numbers = true)]
    a_norm_sq: Option<f64>,
    /// The source model's empirical loss on the shared inputs (shared
    /// bound).
    #[arg(long, allow_negative_numbers = true)]
    source_loss: Option<f64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Root seed; equal flags give byte-identical reports.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of source tasks.
    #[arg(long, default_value_t = 5)]
    n_sources: usize,
    /// Number of target tasks.
    #[arg(long, default_value_t = 6)]
    n_targets: usize,
    /// Training samples per task.
    #[arg(long, default_value_t = 2000)]
    n_train: usize,
    /// Held-out test samples.
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    /// Input dimension.
    #[arg(long, default_value_t = 16)]
    d: usize,
    /// Feature dimension of the frozen extractors.
    #[arg(long, default_value_t = 64)]
    dr: usize,
    /// Source label dimension.
    #[arg(long, default_value_t = 2)]
    ds: usize,
    /// Target label dimension.
    #[arg(long, default_value_t = 2)]
    dt: usize,
    /// Label noise standard deviation.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Source/target subspace alignment in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    alignment: f64,
    /// Comma-separated λ grid.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.5,1,5",
        allow_negative_numbers = true
    )]
    lambdas: Vec<f64>,
    /// Comma-separated training-subset sizes; enables the small-data sweep.
    #[arg(long, value_delimiter = ',')]
    subset_sizes: Vec<usize>,
    /// Random subset draws per sweep size.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Verify both score inequalities on every pair; exit 5 on violation.
    #[arg(long)]
    check_lemmas: bool,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A command's JSON report plus its standard-error lines.
#[derive(Debug)]
struct CmdOutput {
    json: String,
    notes: Vec<String>,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

fn digest_object(entries: Vec<(&str, &LoadedMatrix)>) -> Json {
    Json::Object(
        entries
            .into_iter()
            .map(|(name, loaded)| (name.to_string(), Json::str(&loaded.digest)))
            .collect(),
    )
}

fn as_vector(loaded: &LoadedMatrix, name: &str) -> Result<Vec<f64>, CliError> {
    let m = &loaded.matrix;
    if m.cols() == 1 {
        Ok((0..m.rows()).map(|i| m.get(i, 0)).collect())
    } else if m.rows() == 1 {
        Ok(m.row(0).to_vec())
    } else {
        Err(CliError::Dimension(format!(
            "{name} must be a single column or single row, got {}x{}",
            m.rows(),
            m.cols()
        )))
    }
}

fn cmd_score(args: &ScoreArgs) -> Result<CmdOutput, CliError> {
    let inputs = read_matrix(&args.inputs, args.header.mode())?;
    let targets = read_matrix(&args.targets, args.header.mode())?;

    let start = Instant::now();
    let score = match args.method {
        Method::LinMse => estimators::lin_mse(&inputs.matrix, &targets.matrix, args.lambda),
        Method::LabMse => estimators::lab_mse(&inputs.matrix, &targets.matrix, args.lambda),
        Method::SharedLabMse => {
            estimators::shared_lab_mse(&inputs.matrix, &targets.matrix, args.lambda)
        }
    }
    .map_err(estimator_error)?;
    let compute_ms = elapsed_ms(start);

    let doc = Json::obj(vec![
        ("schema_version", Json::UInt(SCHEMA_VERSION)),
        ("tool_version", Json::str(TOOL_VERSION)),
        ("method", Json::str(score.method.token())),
        ("lambda", Json::Float(score.lambda)),
        ("value", Json::Float(score.value)),
        ("mse_term", Json::Float(score.mse_term)),
        ("penalty_term", Json::Float(score.penalty_term)),
        ("n", Json::UInt(score.n as u64)),
        ("input_dim", Json::UInt(score.input_dim as u64)),
        ("output_dim", Json::UInt(score.output_dim as u64)),
        (
            "input_digests",
            digest_object(vec![("inputs", &inputs), ("targets", &targets)]),
        ),
        ("compute_ms", Json::Float(compute_ms)),
    ]);
    Ok(CmdOutput {
        json: doc.render(),
        notes: Vec::new(),
    })
}

fn correlation_json(report: &CorrelationReport) -> Json {
    Json::obj(vec![
        ("metric", Json::str(report.metric.token())),
        ("value", Json::Float(report.value)),
        (
            "p_value",
            report.p_value.map(Json::Float).unwrap_or(Json::Null),
        ),
        ("n_pairs", Json::UInt(report.n_pairs as u64)),
    ])
}

fn cmd_correlate(args: &CorrelateArgs) -> Result<CmdOutput, CliError> {
    let scores_file = read_matrix(&args.scores, args.header.mode())?;
    let actuals_file = read_matrix(&args.actuals, args.header.mode())?;
    let scores = as_vector(&scores_file, "--scores")?;
    let actuals = as_vector(&actuals_file, "--actuals")?;

    let metrics: Vec<MetricKind> = match args.metric {
        MetricChoice::All => MetricKind::all().to_vec(),
        MetricChoice::One(kind) => vec![kind],
    };
    let start = Instant::now();
    let mut reports = Vec::with_capacity(metrics.len());
    for kind in &metrics {
        let report = match kind {
            MetricKind::Pearson => pearson(&scores, &actuals),
            MetricKind::Spearman => spearman(&scores, &actuals),
            MetricKind::Kendall => kendall_tau(&scores, &actuals),
        }
        .map_err(metric_error)?;
        reports.push(report);
    }
    let compute_ms = elapsed_ms(start);

    let doc = Json::obj(vec![
        ("schema_version", Json::UInt(SCHEMA_VERSION)),
        ("tool_version", Json::str(TOOL_VERSION)),
        ("n_pairs", Json::UInt(scores.len() as u64)),
        (
            "reports",
            Json::Array(reports.iter().map(correlation_json).collect()),
        ),
        (
            "input_digests",
            digest_object(vec![("scores", &scores_file), ("actuals", &actuals_file)]),
        ),
        ("compute_ms", Json::Float(compute_ms)),
    ]);
    Ok(CmdOutput {
        json: doc.render(),
        notes: Vec::new(),
    })
}

fn top_k_json(report: &TopKReport) -> Json {
    Json::obj(vec![
        ("k", Json::UInt(report.k as u64)),
        ("rate", Json::Float(report.rate)),
        ("m_match", Json::UInt(report.m_match as u64)),
        ("m_target", Json::UInt(report.m_target as u64)),
        (
            "per_target",
            Json::Array(
                report
                    .per_target
                    .iter()
                    .map(|t| {
                        Json::obj(vec![
                            ("target", Json::UInt(t.target as u64)),
                            ("selected_source", Json::UInt(t.selected_source as u64)),
                            ("selection_tied", Json::Bool(t.selection_tied)),
                            (
                                "top_actual_sources",
                                Json::Array(
                                    t.top_actual_sources
                                        .iter()
                                        .map(|&s| Json::UInt(s as u64))
                                        .collect(),
                                ),
                            ),
                            ("matched", Json::Bool(t.matched)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ])
}

fn cmd_select_source(args: &SelectSourceArgs) -> Result<CmdOutput, CliError> {
    let scores = read_matrix(&args.scores, args.header.mode())?;
    let actuals = read_matrix(&args.actuals, args.header.mode())?;

    let start = Instant::now();
    let mut results = Vec::with_capacity(args.k.len());
    for &k in &args.k {
        let report =
            top_k_matching_rate(&scores.matrix, &actuals.matrix, k).map_err(metric_error)?;
        results.push(report);
    }
    let compute_ms = elapsed_ms(start);

    let doc = Json::obj(vec![
        ("schema_version", Json::UInt(SCHEMA_VERSION)),
        ("tool_version", Json::str(TOOL_VERSION)),
        ("n_sources", Json::UInt(scores.matrix.rows() as u64)),
        ("n_targets", Json::UInt(scores.matrix.cols() as u64)),
        (
            "results",
            Json::Array(results.iter().map(top_k_json).collect()),
        ),
        (
            "input_digests",
            digest_object(vec![("scores", &scores), ("actuals", &actuals)]),
        ),
        ("compute_ms", Json::Float(compute_ms)),
    ]);
    Ok(CmdOutput {
        json: doc.render(),
        notes: Vec::new(),
    })
}

fn cmd_bound(args: &BoundArgs) -> Result<CmdOutput, CliError> {
    if args.shared && (args.a_norm_sq.is_none() || args.source_loss.is_none()) {
        return Err(CliError::Config(
            "--shared requires --a-norm-sq and --source-loss".into(),
        ));
    }
    if !args.shared && (args.a_norm_sq.is_some() || args.source_loss.is_some()) {
        return Err(CliError::Config(
            "--a-norm-sq/--source-loss only apply with --shared".into(),
        ));
    }
    let spec = ComplexitySpec {
        d: args.d,
        d_t: args.dt,
        m: args.m,
        h: args.h,
        l: args.l,
        delta: args.delta,
        n: args.n,
    };

    let start = Instant::now();
    let complexity = complexity_term(&spec).map_err(estimator_error)?;
    let lower_bound = if args.shared {
        shared_transfer_lower_bound(
            args.score,
            args.a_norm_sq.unwrap(),
            args.source_loss.unwrap(),
            &spec,
        )
    } else {
        label_transfer_lower_bound(args.score, &spec)
    }
    .map_err(estimator_error)?;
    let compute_ms = elapsed_ms(start);

    let mut notes = Vec::new();
    if args.delta > 1.0 {
        notes.push(format!(
            "warning: delta = {} exceeds 1; the probabilistic guarantee only covers delta <= 1",
            args.delta
        ));
    }

    let mut fields = vec![
        ("schema_version", Json::UInt(SCHEMA_VERSION)),
        ("tool_version", Json::str(TOOL_VERSION)),
        (
            "kind",
            Json::str(if args.shared { "shared" } else { "label" }),
        ),
        ("score", Json::Float(args.score)),
        (
            "spec",
            Json::obj(vec![
                ("d", Json::UInt(args.d as u64)),
                ("dt", Json::UInt(args.dt as u64)),
                ("M", Json::Float(args.m)),
                ("H", Json::UInt(args.h as u64)),
                ("L", Json::UInt(args.l as u64)),
                ("delta", Json::Float(args.delta)),
                ("n", Json::UInt(args.n as u64)),
            ]),
        ),
        ("complexity_term", Json::Float(complexity)),
        (
            "complexity_over_sqrt_n",
            Json::Float(complexity / (args.n as f64).sqrt()),
        ),
        ("lower_bound", Json::Float(lower_bound)),
    ];
    if args.shared {
        fields.push(("a_norm_sq", Json::Float(args.a_norm_sq.unwrap())));
        fields.push(("source_loss", Json::Float(args.source_loss.unwrap())));
    }
    fields.push(("compute_ms", Json::Float(compute_ms)));

    Ok(CmdOutput {
        json: Json::obj(fields).render(),
        notes,
    })
}

fn lambda_key(lambda: f64) -> String {
    format!("{lambda}")
}

fn bench_pairs_json(result: &BenchResult) -> Json {
    Json::Array(
        result
            .pairs
            .iter()
            .map(|pair| {
                let scores = Json::Object(
                    result
                        .methods
                        .iter()
                        .map(|&method| {
                            let per_lambda = Json::Object(
                                result
                                    .lambdas
                                    .iter()
                                    .map(|&lambda| {
                                        let entry = pair
                                            .scores
                                            .iter()
                                            .find(|s| s.method == method && s.lambda == lambda)
                                            .expect("every pair carries every configured score");
                                        (lambda_key(lambda), Json::Float(entry.value))
                                    })
                                    .collect(),
                            );
                            (method.token().to_string(), per_lambda)
                        })
                        .collect(),
                );
                Json::obj(vec![
                    ("source_id", Json::UInt(pair.source_id as u64)),
                    ("target_id", Json::UInt(pair.target_id as u64)),
                    ("scores", scores),
                    (
                        "actual_train_neg_mse",
                        Json::Float(pair.actual_train_neg_mse),
                    ),
                    ("actual_test_neg_mse", Json::Float(pair.actual_test_neg_mse)),
                    ("shared_source_loss", Json::Float(pair.shared_source_loss)),
                ])
            })
            .collect(),
    )
}

fn bench_correlations_json(result: &BenchResult) -> Json {
    Json::Array(
        result
            .correlations
            .iter()
            .map(|entry| {
                let (value, p_value, n_pairs) = match &entry.report {
                    Some(r) => (
                        Json::Float(r.value),
                        r.p_value.map(Json::Float).unwrap_or(Json::Null),
                        Json::UInt(r.n_pairs as u64),
                    ),
                    None => (Json::Null, Json::Null, Json::Null),
                };
                Json::obj(vec![
                    ("method", Json::str(entry.method.token())),
                    ("lambda", Json::Float(entry.lambda)),
                    ("metric", Json::str(entry.metric.token())),
                    ("value", value),
                    ("p_value", p_value),
                    ("n_pairs", n_pairs),
                    (
                        "note",
                        entry
                            .note
                            .as_ref()
                            .map(|n| Json::str(n))
                            .unwrap_or(Json::Null),
                    ),
                ])
            })
            .collect(),
    )
}

fn sweep_json(sweep: &SweepResult) -> Json {
    Json::obj(vec![
        (
            "sizes",
            Json::Array(sweep.sizes.iter().map(|&s| Json::UInt(s as u64)).collect()),
        ),
        ("repeats", Json::UInt(sweep.repeats as u64)),
        (
            "entries",
            Json::Array(
                sweep
                    .entries
                    .iter()
                    .map(|e| {
                        Json::obj(vec![
                            ("size", Json::UInt(e.size as u64)),
                            ("method", Json::str(e.method.token())),
                            ("lambda", Json::Float(e.lambda)),
                            ("metric", Json::str(e.metric.token())),
                            (
                                "mean_value",
                                e.mean_value.map(Json::Float).unwrap_or(Json::Null),
                            ),
                            ("repeats_used", Json::UInt(e.repeats_used as u64)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ])
}

fn lemma_checks_json(checks: &[PairBoundChecks], lambdas: &[f64]) -> (Json, usize) {
    let mut violations = Vec::new();
    for check in checks {
        if !check.label_check.holds {
            violations.push(Json::obj(vec![
                ("source_id", Json::UInt(check.source_id as u64)),
                ("target_id", Json::UInt(check.target_id as u64)),
                ("lambda", Json::Float(check.lambda)),
                ("which", Json::str("label")),
                ("gap", Json::Float(check.label_check.gap)),
            ]));
        }
        if !check.shared_check.holds {
            violations.push(Json::obj(vec![
                ("source_id", Json::UInt(check.source_id as u64)),
                ("target_id", Json::UInt(check.target_id as u64)),
                ("lambda", Json::Float(check.lambda)),
                ("which", Json::str("shared")),
                ("gap", Json::Float(check.shared_check.gap)),
            ]));
        }
    }
    let n_violations = violations.len();
    let doc = Json::obj(vec![
        (
            "lambdas",
            Json::Array(lambdas.iter().map(|&l| Json::Float(l)).collect()),
        ),
        ("n_checks", Json::UInt((checks.len() * 2) as u64)),
        ("all_hold", Json::Bool(n_violations == 0)),
        ("violations", Json::Array(violations)),
    ]);
    (doc, n_violations)
}

fn cmd_bench(args: &BenchArgs) -> Result<(CmdOutput, Option<String>), CliError> {
    let spec = TaskSpec {
        seed: args.seed,
        n_train: args.n_train,
        n_test: args.n_test,
        input_dim: args.d,
        feature_dim: args.dr,
        source_label_dim: args.ds,
        target_label_dim: args.dt,
        noise_std: args.noise,
        alignment: args.alignment,
    };
    let methods = Method::all();

    let start = Instant::now();
    let family =
        generate_task_family(&spec, args.n_sources, args.n_targets).map_err(bench_error)?;
    let result = run_benchmark(&family, &args.lambdas, &methods).map_err(bench_error)?;
    let sweep = if args.subset_sizes.is_empty() {
        None
    } else {
        Some(
            small_data_sweep(&family, &args.subset_sizes, args.repeats, &args.lambdas, &methods)
                .map_err(bench_error)?,
        )
    };
    let checks = if args.check_lemmas {
        Some(verify_bounds(&family, &result.lambdas).map_err(bench_error)?)
    } else {
        None
    };
    let compute_ms = elapsed_ms(start);

    let config = Json::obj(vec![
        ("seed", Json::UInt(args.seed)),
        ("n_sources", Json::UInt(args.n_sources as u64)),
        ("n_targets", Json::UInt(args.n_targets as u64)),
        ("n_train", Json::UInt(args.n_train as u64)),
        ("n_test", Json::UInt(args.n_test as u64)),
        ("input_dim", Json::UInt(args.d as u64)),
        ("feature_dim", Json::UInt(args.dr as u64)),
        ("source_label_dim", Json::UInt(args.ds as u64)),
        ("target_label_dim", Json::UInt(args.dt as u64)),
        ("noise_std", Json::Float(args.noise)),
        ("alignment", Json::Float(args.alignment)),
        (
            "lambdas",
            Json::Array(result.lambdas.iter().map(|&l| Json::Float(l)).collect()),
        ),
        (
            "methods",
            Json::Array(
                result
                    .methods
                    .iter()
                    .map(|m| Json::str(m.token()))
                    .collect(),
            ),
        ),
        (
            "subset_sizes",
            Json::Array(
                args.subset_sizes
                    .iter()
                    .map(|&s| Json::UInt(s as u64))
                    .collect(),
            ),
        ),
        ("repeats", Json::UInt(args.repeats as u64)),
    ]);

    let (lemma_json, n_violations) = match &checks {
        Some(list) => {
            let (doc, n) = lemma_checks_json(list, &result.lambdas);
            (doc, n)
        }
        None => (Json::Null, 0),
    };

    let doc = Json::obj(vec![
        ("schema_version", Json::UInt(SCHEMA_VERSION)),
        ("tool_version", Json::str(TOOL_VERSION)),
        ("config", config),
        ("n_pairs", Json::UInt(result.pairs.len() as u64)),
        ("pairs", bench_pairs_json(&result)),
        ("correlations", bench_correlations_json(&result)),
        (
            "sweep",
            sweep.as_ref().map(sweep_json).unwrap_or(Json::Null),
        ),
        ("lemma_checks", lemma_json),
    ]);

    let notes = vec![format!(
        "bench: computed {} pairs in {compute_ms:.1} ms",
        result.pairs.len()
    )];
    let failure = if n_violations > 0 {
        Some(format!(
            "{n_violations} inequality check(s) violated beyond tolerance"
        ))
    } else {
        None
    };
    Ok((
        CmdOutput {
            json: doc.render(),
            notes,
        },
        failure,
    ))
}

fn emit(output: CmdOutput, out: Option<&Path>) -> Result<(), CliError> {
    for note in &output.notes {
        eprintln!("{note}");
    }
    match out {
        Some(path) => std::fs::write(path, output.json).map_err(|e| {
            CliError::Config(format!("{}: {e}", path.display()))
        }),
        None => {
            print!("{}", output.json);
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Score(args) => {
            let output = cmd_score(&args)?;
            emit(output, args.out.as_deref())
        }
        Command::Correlate(args) => {
            let output = cmd_correlate(&args)?;
            emit(output, args.out.as_deref())
        }
        Command::SelectSource(args) => {
            let output = cmd_select_source(&args)?;
            emit(output, args.out.as_deref())
        }
        Command::Bound(args) => {
            let output = cmd_bound(&args)?;
            emit(output, args.out.as_deref())
        }
        Command::Bench(args) => {
            let (output, lemma_failure) = cmd_bench(&args)?;
            emit(output, args.out.as_deref())?;
            if let Some(message) = lemma_failure {
                return Err(CliError::BoundViolated(message));
            }
            Ok(())
        }
    }
}

/// Parses the process arguments, runs the command, and returns the exit
/// code. Usage errors exit directly (code 2, clap's default).
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(error) => {
            eprintln!("error: {error}");
            error.exit_code()
        }
    }
}
