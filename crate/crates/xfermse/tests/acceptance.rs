//! Acceptance suite: one test per release criterion, each printing a
//! `ACCEPTANCE <n>: PASS` line (visible with `--nocapture`). Oracles are
//! implemented inside this file, independently of the library's internals:
//! a full-batch gradient-descent minimizer for the ridge objective and an
//! O(n²) pair-enumeration Kendall correlation.

use std::time::Instant;

use xfermse::estimators::{
    check_label_score_bound, check_shared_score_bound, complexity_term, lab_mse,
    label_transfer_lower_bound, lin_mse, shared_transfer_lower_bound, ComplexitySpec, Method,
};
use xfermse::evalmetrics::{kendall_tau, pearson, spearman, top_k_matching_rate, MetricKind};
use xfermse::numkit::Matrix;
use xfermse::ridge::ridge_fit;
use xfermse::rng::{subseed, Rng};
use xfermse::synthbench::{generate_task_family, run_benchmark, small_data_sweep, TaskSpec};

const SUITE_SEED: u64 = 20260822;

fn normal_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.next_normal()).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

// ---------------------------------------------------------------------------
// Criterion 1: ridge_fit vs a full-batch gradient-descent oracle.
// ---------------------------------------------------------------------------

/// The full ridge objective, written directly from its definition (mean
/// squared residual plus λ times the squared map norm, intercept free).
/// `a` is row-major `q × p`.
fn oracle_objective(a: &[f64], b: &[f64], u: &Matrix, y: &Matrix, lambda: f64) -> f64 {
    let n = u.rows();
    let p = u.cols();
    let q = y.cols();
    let mut total = 0.0;
    for i in 0..n {
        let ui = u.row(i);
        let yi = y.row(i);
        for j in 0..q {
            let mut pred = b[j];
            for k in 0..p {
                pred += a[j * p + k] * ui[k];
            }
            let r = yi[j] - pred;
            total += r * r;
        }
    }
    let mut penalty = 0.0;
    for &v in a {
        penalty += v * v;
    }
    total / n as f64 + lambda * penalty
}

/// Steepest descent with exact line search on the (convex quadratic) ridge
/// objective, one output column at a time. Returns the final objective.
fn gradient_descent_objective(u: &Matrix, y: &Matrix, lambda: f64) -> f64 {
    let n = u.rows();
    let p = u.cols();
    let q = y.cols();
    let nf = n as f64;
    let mut a = vec![0.0; q * p];
    let mut b = vec![0.0; q];

    for j in 0..q {
        let aj = &mut a[j * p..(j + 1) * p];
        let bj = &mut b[j];
        let mut grad = vec![0.0; p + 1]; // [grad_a..., grad_b]
        let mut tol = f64::INFINITY;
        for iter in 0..400_000 {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for i in 0..n {
                let ui = u.row(i);
                let mut r = y.get(i, j) - *bj;
                for k in 0..p {
                    r -= aj[k] * ui[k];
                }
                for k in 0..p {
                    grad[k] -= 2.0 * r * ui[k] / nf;
                }
                grad[p] -= 2.0 * r / nf;
            }
            for k in 0..p {
                grad[k] += 2.0 * lambda * aj[k];
            }
            let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if iter == 0 {
                tol = 1e-11 * (1.0 + gmax);
            }
            if gmax <= tol {
                break;
            }
            // Exact line search along d = −g: t* = ‖g‖² / dᵀHd.
            let mut curvature = 2.0 * lambda * grad[..p].iter().map(|g| g * g).sum::<f64>();
            for i in 0..n {
                let ui = u.row(i);
                let mut s = grad[p];
                for k in 0..p {
                    s += grad[k] * ui[k];
                }
                curvature += 2.0 * s * s / nf;
            }
            if curvature <= 0.0 {
                break;
            }
            let gsq: f64 = grad.iter().map(|g| g * g).sum();
            let t = gsq / curvature;
            for k in 0..p {
                aj[k] -= t * grad[k];
            }
            *bj -= t * grad[p];
        }
    }
    oracle_objective(&a, &b, u, y, lambda)
}

#[test]
fn acceptance_01_ridge_matches_gradient_descent_oracle() {
    let start = Instant::now();
    for instance in 0..100u64 {
        let mut rng = Rng::new(subseed(SUITE_SEED, "ridge-oracle", instance));
        let p = 1 + rng.next_below(8) as usize;
        let q = 1 + rng.next_below(3) as usize;
        let n = (p + 5) + rng.next_below((50 - p - 5 + 1) as u64) as usize;
        let u = normal_matrix(&mut rng, n, p);
        let truth = normal_matrix(&mut rng, q, p);
        let mut y = Matrix::zeros(n, q);
        for i in 0..n {
            for j in 0..q {
                let mut v = 0.3 * rng.next_normal();
                for k in 0..p {
                    v += truth.get(j, k) * u.get(i, k);
                }
                y.set(i, j, v);
            }
        }

        for &lambda in &[0.0, 0.1, 1.0] {
            let fit = ridge_fit(&u, &y, lambda).unwrap();
            let fit_objective = fit.objective();
            let oracle = gradient_descent_objective(&u, &y, lambda);
            assert!(
                (fit_objective - oracle).abs() <= 1e-6,
                "instance {instance} λ={lambda}: ridge {fit_objective} vs oracle {oracle}"
            );

            // Finite-difference gradient of the raw objective at the fit
            // must vanish (the fit is a stationary point).
            let a_flat = fit.a.data();
            let mut max_grad = 0.0f64;
            let mut probe_a = a_flat.to_vec();
            let mut probe_b = fit.b.clone();
            for idx in 0..probe_a.len() + probe_b.len() {
                let (slot, is_a) = if idx < probe_a.len() {
                    (idx, true)
                } else {
                    (idx - probe_a.len(), false)
                };
                let base = if is_a { probe_a[slot] } else { probe_b[slot] };
                let h = 1e-6 * (1.0 + base.abs());
                let mut eval = |v: f64, probe_a: &mut Vec<f64>, probe_b: &mut Vec<f64>| {
                    if is_a {
                        probe_a[slot] = v;
                    } else {
                        probe_b[slot] = v;
                    }
                    let obj = oracle_objective(probe_a, probe_b, &u, &y, lambda);
                    if is_a {
                        probe_a[slot] = base;
                    } else {
                        probe_b[slot] = base;
                    }
                    obj
                };
                let plus = eval(base + h, &mut probe_a, &mut probe_b);
                let minus = eval(base - h, &mut probe_a, &mut probe_b);
                max_grad = max_grad.max(((plus - minus) / (2.0 * h)).abs());
            }
            assert!(
                max_grad <= 1e-5,
                "instance {instance} λ={lambda}: finite-difference gradient {max_grad}"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 1 took {elapsed:.2} s");
    println!("ACCEPTANCE 1: PASS (100 instances x 3 lambdas in {elapsed:.2} s)");
}

// ---------------------------------------------------------------------------
// Criteria 2 and 3: the two score inequalities on conforming instances.
// ---------------------------------------------------------------------------

/// A conforming instance for the label-score inequality: source predictions
/// that are an exact affine map of the features.
fn conforming_instance(seed_index: u64) -> (Matrix, Matrix, Matrix) {
    let mut rng = Rng::new(subseed(SUITE_SEED, "label-suite", seed_index));
    let p = 1 + rng.next_below(6) as usize;
    let q = 1 + rng.next_below(3) as usize;
    let out = 1 + rng.next_below(3) as usize;
    let n = 20 + rng.next_below(41) as usize;
    let features = normal_matrix(&mut rng, n, p);
    let map = normal_matrix(&mut rng, q, p);
    let offset: Vec<f64> = (0..q).map(|_| rng.next_normal()).collect();
    let mut dummy = Matrix::zeros(n, q);
    for i in 0..n {
        for j in 0..q {
            let mut v = offset[j];
            for k in 0..p {
                v += map.get(j, k) * features.get(i, k);
            }
            dummy.set(i, j, v);
        }
    }
    let targets = normal_matrix(&mut rng, n, out);
    (features, dummy, targets)
}

#[test]
fn acceptance_02_label_score_inequality_suite() {
    let start = Instant::now();
    let lambdas = [0.0, 0.5, 1.0, 5.0, 20.0];
    let mut violations = 0;
    for seed_index in 0..100u64 {
        let (features, dummy, targets) = conforming_instance(seed_index);
        for &lambda in &lambdas {
            let check = check_label_score_bound(&features, &dummy, &targets, lambda).unwrap();
            if !check.holds {
                violations += 1;
                eprintln!(
                    "violation: instance {seed_index} λ={lambda} gap {}",
                    check.gap
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(violations, 0, "label-score inequality violations");
    assert!(elapsed < 10.0, "criterion 2 took {elapsed:.2} s");
    println!("ACCEPTANCE 2: PASS (500 checks, zero violations, {elapsed:.2} s)");
}

#[test]
fn acceptance_03_shared_score_inequality_suite() {
    let start = Instant::now();
    let lambdas = [0.0, 0.5, 1.0, 5.0, 20.0];
    let mut violations = 0;
    for seed_index in 0..100u64 {
        let mut rng = Rng::new(subseed(SUITE_SEED, "shared-suite", seed_index));
        let p = 1 + rng.next_below(6) as usize;
        let q = 1 + rng.next_below(3) as usize;
        let out = 1 + rng.next_below(3) as usize;
        let n = 20 + rng.next_below(41) as usize;
        let features = normal_matrix(&mut rng, n, p);
        let map = normal_matrix(&mut rng, q, p);
        let offset: Vec<f64> = (0..q).map(|_| rng.next_normal()).collect();
        // Source model predictions: exact affine map of the shared features.
        // Source labels: predictions plus noise, with the model's loss
        // measured on exactly these shared inputs.
        let mut source_labels = Matrix::zeros(n, q);
        let mut source_loss = 0.0;
        for i in 0..n {
            for j in 0..q {
                let mut pred = offset[j];
                for k in 0..p {
                    pred += map.get(j, k) * features.get(i, k);
                }
                let noise = 0.3 * rng.next_normal();
                source_labels.set(i, j, pred + noise);
                source_loss += noise * noise;
            }
        }
        source_loss /= n as f64;
        let targets = normal_matrix(&mut rng, n, out);
        for &lambda in &lambdas {
            let check =
                check_shared_score_bound(&source_labels, &targets, &features, lambda, source_loss)
                    .unwrap();
            if !check.holds {
                violations += 1;
                eprintln!(
                    "violation: instance {seed_index} λ={lambda} gap {}",
                    check.gap
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(violations, 0, "shared-score inequality violations");
    assert!(elapsed < 10.0, "criterion 3 took {elapsed:.2} s");
    println!("ACCEPTANCE 3: PASS (500 checks, zero violations, {elapsed:.2} s)");
}

// ---------------------------------------------------------------------------
// Criterion 4: score-λ monotonicity across the sweep grid.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_04_lambda_monotonicity_on_benchmark_pairs() {
    let grid = [
        0.0, 0.001, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0,
    ];
    let family = generate_task_family(&TaskSpec::default(), 5, 6).unwrap();
    let result = run_benchmark(&family, &grid, &Method::all()).unwrap();
    assert_eq!(result.pairs.len(), 30);
    for pair in &result.pairs {
        for &method in &result.methods {
            let mut previous = f64::INFINITY;
            for &lambda in &grid {
                let value = pair
                    .scores
                    .iter()
                    .find(|s| s.method == method && s.lambda == lambda)
                    .unwrap()
                    .value;
                assert!(
                    value <= previous + 1e-12,
                    "pair ({}, {}) {method}: {previous} -> {value} at λ={lambda}",
                    pair.source_id,
                    pair.target_id
                );
                previous = value;
            }
        }
    }
    println!("ACCEPTANCE 4: PASS (30 pairs x 3 estimators x 11-point grid)");
}

// ---------------------------------------------------------------------------
// Criterion 5: default-benchmark correlation thresholds.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_default_benchmark_correlations() {
    let start = Instant::now();
    let family = generate_task_family(&TaskSpec::default(), 5, 6).unwrap();
    let result = run_benchmark(&family, &[0.0], &[Method::LinMse, Method::LabMse]).unwrap();
    assert_eq!(result.pairs.len(), 30, "default benchmark is 5 x 6 pairs");

    let lin = result
        .correlation(Method::LinMse, 0.0, MetricKind::Pearson)
        .and_then(|c| c.report.as_ref())
        .expect("LinMSE0 Pearson present")
        .value;
    let lab = result
        .correlation(Method::LabMse, 0.0, MetricKind::Pearson)
        .and_then(|c| c.report.as_ref())
        .expect("LabMSE0 Pearson present")
        .value;
    let elapsed = start.elapsed().as_secs_f64();
    assert!(lin >= 0.95, "Pearson(LinMSE0, actual) = {lin} < 0.95");
    assert!(lab >= 0.90, "Pearson(LabMSE0, actual) = {lab} < 0.90");
    assert!(elapsed < 60.0, "criterion 5 took {elapsed:.2} s");
    println!(
        "ACCEPTANCE 5: PASS (Pearson LinMSE0 {lin:.4} >= 0.95, LabMSE0 {lab:.4} >= 0.90, {elapsed:.2} s)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: regularization helps in the small-data regime.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_small_data_regularization_direction() {
    let family = generate_task_family(&TaskSpec::default(), 5, 6).unwrap();
    let sweep = small_data_sweep(&family, &[16, 32], 10, &[0.0, 1.0], &[Method::LinMse]).unwrap();
    for &size in &[16usize, 32] {
        let at = |lambda: f64| {
            sweep
                .entry(size, Method::LinMse, lambda, MetricKind::Pearson)
                .and_then(|e| e.mean_value)
                .unwrap_or_else(|| panic!("size {size} λ={lambda} missing"))
        };
        let lin0 = at(0.0);
        let lin1 = at(1.0);
        assert!(
            lin1 >= lin0,
            "size {size}: mean Pearson LinMSE1 {lin1} < LinMSE0 {lin0}"
        );
        println!("ACCEPTANCE 6: size {size}: LinMSE1 {lin1:.4} >= LinMSE0 {lin0:.4}");
    }
    println!("ACCEPTANCE 6: PASS (sizes 16 and 32, 10 repeats each)");
}

// ---------------------------------------------------------------------------
// Criterion 7: correlation-metric oracles.
// ---------------------------------------------------------------------------

/// O(n²) pair-enumeration Kendall τ-b, straight from the definition.
fn kendall_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut tied_x = 0i64;
    let mut tied_y = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                // tied in both: contributes to neither adjustment
            } else if dx == 0.0 {
                tied_x += 1;
            } else if dy == 0.0 {
                tied_y += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    let denom = ((n0 - tied_x as f64 - count_joint_ties_x(x, y)) // placeholder, replaced below
        * 1.0)
        .sqrt();
    let _ = denom;
    // τ-b denominator needs the full tie counts per variable (pairs tied in
    // x, and pairs tied in y, each including pairs tied in both).
    let tx = pairs_tied(x);
    let ty = pairs_tied(y);
    (concordant - discordant) as f64 / ((n0 - tx).sqrt() * (n0 - ty).sqrt())
}

fn pairs_tied(v: &[f64]) -> f64 {
    let n = v.len();
    let mut tied = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            if v[i] == v[j] {
                tied += 1;
            }
        }
    }
    tied as f64
}

fn count_joint_ties_x(_x: &[f64], _y: &[f64]) -> f64 {
    0.0
}

#[test]
fn acceptance_07_correlation_metric_oracles() {
    // Kendall fast path vs the O(n²) oracle.
    for trial in 0..50u64 {
        let mut rng = Rng::new(subseed(SUITE_SEED, "kendall-oracle", trial));
        let n = 2 + rng.next_below(499) as usize;
        let quantize = trial % 2 == 0;
        let draw = |rng: &mut Rng| {
            let v = rng.next_normal();
            if quantize {
                (v * 3.0).round() / 3.0
            } else {
                v
            }
        };
        let x: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        match kendall_tau(&x, &y) {
            Ok(report) => {
                let oracle = kendall_oracle(&x, &y);
                assert!(
                    (report.value - oracle).abs() <= 1e-12,
                    "trial {trial} n={n}: fast {} vs oracle {oracle}",
                    report.value
                );
            }
            Err(_) => {
                // Degenerate draws (all tied) are rejected by both paths.
                assert!(
                    x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]),
                    "trial {trial}: unexpected rejection"
                );
            }
        }
    }

    // Frozen fixtures.
    let x = [1.0, 2.0, 3.0];
    let y = [1.0, 3.0, 2.0];
    let r = pearson(&x, &y).unwrap().value;
    assert!((r - 0.5).abs() <= 1e-12, "pearson fixture: {r}");
    let s = spearman(&x, &y).unwrap().value;
    assert!((s - 0.5).abs() <= 1e-12, "spearman fixture: {s}");
    let k = kendall_tau(&x, &y).unwrap().value;
    assert!((k - 1.0 / 3.0).abs() <= 1e-12, "kendall fixture: {k}");
    println!("ACCEPTANCE 7: PASS (50 oracle trials + exact fixtures)");
}

// ---------------------------------------------------------------------------
// Criterion 8: top-k matching-rate semantics.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_top_k_matching() {
    // Identity fixture: scores equal to actual outcomes select perfectly.
    let mut rng = Rng::new(subseed(SUITE_SEED, "topk-identity", 0));
    let actual = normal_matrix(&mut rng, 5, 4);
    for k in 1..=5 {
        let report = top_k_matching_rate(&actual, &actual, k).unwrap();
        assert_eq!(report.rate, 1.0, "identity fixture at k={k}");
    }

    // Constructed 3-source, 2-target fixture: the estimator picks source 1
    // for both targets, which is actually best only for target 1.
    let scores = Matrix::from_rows(&[vec![0.5, 0.2], vec![0.9, 0.8], vec![0.1, 0.3]]);
    let actual = Matrix::from_rows(&[vec![-0.1, -0.5], vec![-0.2, -0.1], vec![-0.3, -0.4]]);
    let top1 = top_k_matching_rate(&scores, &actual, 1).unwrap();
    assert!((top1.rate - 0.5).abs() <= 1e-15, "top-1 = {}", top1.rate);
    let top2 = top_k_matching_rate(&scores, &actual, 2).unwrap();
    assert!((top2.rate - 1.0).abs() <= 1e-15, "top-2 = {}", top2.rate);

    // Rate is non-decreasing in k and reaches 1 at k = sources.
    for trial in 0..50u64 {
        let mut rng = Rng::new(subseed(SUITE_SEED, "topk-monotone", trial));
        let sources = 2 + rng.next_below(7) as usize;
        let targets = 1 + rng.next_below(6) as usize;
        let est = normal_matrix(&mut rng, sources, targets);
        let act = normal_matrix(&mut rng, sources, targets);
        let mut previous = 0.0;
        for k in 1..=sources {
            let rate = top_k_matching_rate(&est, &act, k).unwrap().rate;
            assert!(
                rate >= previous,
                "trial {trial}: rate fell from {previous} to {rate} at k={k}"
            );
            previous = rate;
        }
        assert_eq!(previous, 1.0, "trial {trial}: rate at k = sources");
    }
    println!("ACCEPTANCE 8: PASS (fixtures + 50 monotonicity trials)");
}

// ---------------------------------------------------------------------------
// Criterion 9: bound calculators.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_bound_calculators() {
    // Frozen arithmetic fixture: all shape parameters 1, δ = 4·e⁻² so the
    // log term is exactly 2, giving 16·(√2 + 2).
    let fixture = ComplexitySpec {
        d: 1,
        d_t: 1,
        m: 1.0,
        h: 1,
        l: 1,
        delta: 4.0 / std::f64::consts::E.powi(2),
        n: 100,
    };
    let c = complexity_term(&fixture).unwrap();
    let expected = 16.0 * (2.0f64.sqrt() + 2.0);
    assert!((c - expected).abs() <= 1e-9, "complexity {c} vs {expected}");

    for trial in 0..20u64 {
        let mut rng = Rng::new(subseed(SUITE_SEED, "bound-specs", trial));
        let spec = ComplexitySpec {
            d: 1 + rng.next_below(5) as usize,
            d_t: 1 + rng.next_below(5) as usize,
            m: 1.0 + 2.0 * rng.next_f64(),
            h: 1 + rng.next_below(3) as usize,
            l: 1 + rng.next_below(3) as usize,
            delta: 0.05 + 0.9 * rng.next_f64(),
            n: 10 + rng.next_below(1_000_000) as usize,
        };
        let score = -rng.next_f64() * 5.0;

        // The guaranteed value never exceeds the score itself.
        let label_bound = label_transfer_lower_bound(score, &spec).unwrap();
        assert!(label_bound < score, "trial {trial}: label bound ≥ score");
        let a_norm_sq = rng.next_f64() * 4.0;
        let source_loss = rng.next_f64();
        let shared_bound =
            shared_transfer_lower_bound(score, a_norm_sq, source_loss, &spec).unwrap();
        assert!(
            shared_bound < score,
            "trial {trial}: shared bound ≥ score (score ≤ 0)"
        );

        // Monotonicity: larger δ shrinks the complexity term; larger n
        // raises the bound.
        let smaller_delta = ComplexitySpec {
            delta: spec.delta * 0.5,
            ..spec
        };
        assert!(
            complexity_term(&smaller_delta).unwrap() > complexity_term(&spec).unwrap(),
            "trial {trial}: complexity not decreasing in δ"
        );
        let bigger_n = ComplexitySpec {
            n: spec.n * 4,
            ..spec
        };
        assert!(
            label_transfer_lower_bound(score, &bigger_n).unwrap() > label_bound,
            "trial {trial}: label bound not increasing in n"
        );
    }
    println!("ACCEPTANCE 9: PASS (fixture within 1e-9 + 20 random specs)");
}

// ---------------------------------------------------------------------------
// Criterion 10: determinism and file I/O.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10_determinism_and_round_trips() {
    // Repeated bench runs of the installed binary are byte-identical.
    let bin = env!("CARGO_BIN_EXE_xfermse");
    let bench_args = [
        "bench",
        "--seed",
        "3",
        "--n-sources",
        "2",
        "--n-targets",
        "3",
        "--n-train",
        "200",
        "--n-test",
        "100",
        "--d",
        "6",
        "--dr",
        "12",
        "--ds",
        "1",
        "--dt",
        "2",
        "--lambdas",
        "0,1",
    ];
    let run = || {
        let output = std::process::Command::new(bin)
            .args(bench_args)
            .output()
            .expect("bench run");
        assert!(output.status.success(), "bench exited nonzero");
        output.stdout
    };
    let first = run();
    let second = run();
    assert!(!first.is_empty());
    assert_eq!(first, second, "bench output must be byte-identical");

    // CSV and xmat round trips are bitwise on 20 random matrices, the last
    // of them benchmark-sized (1000 × 512).
    use xfermse::cli::matfile::{read_matrix, write_matrix, HeaderMode};
    let dir = tempfile::tempdir().unwrap();
    for trial in 0..20u64 {
        let mut rng = Rng::new(subseed(SUITE_SEED, "round-trip", trial));
        let (rows, cols) = if trial == 19 {
            (1000, 512)
        } else {
            (
                1 + rng.next_below(40) as usize,
                1 + rng.next_below(12) as usize,
            )
        };
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            // Mix magnitudes to exercise the formatter.
            let scale = 10.0f64.powi(rng.next_below(13) as i32 - 6);
            data.push(rng.next_normal() * scale);
        }
        let matrix = Matrix::from_vec(rows, cols, data).unwrap();
        for ext in ["csv", "xmat"] {
            let path = dir.path().join(format!("m{trial}.{ext}"));
            write_matrix(&path, &matrix).unwrap();
            let loaded = read_matrix(&path, HeaderMode::Auto).unwrap().matrix;
            assert_eq!(
                (loaded.rows(), loaded.cols()),
                (rows, cols),
                "trial {trial} {ext}"
            );
            for (a, b) in loaded.data().iter().zip(matrix.data().iter()) {
                assert_eq!(a.to_bits(), b.to_bits(), "trial {trial} {ext}: {a} vs {b}");
            }
        }
    }
    println!("ACCEPTANCE 10: PASS (byte-identical bench + 20 bitwise round trips)");
}

// ---------------------------------------------------------------------------
// Criterion 11: efficiency smoke test.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_11_efficiency_smoke() {
    let mut rng = Rng::new(subseed(SUITE_SEED, "efficiency", 0));
    let n = 10_000;
    let dummy = normal_matrix(&mut rng, n, 2);
    let features = normal_matrix(&mut rng, n, 512);
    let targets = normal_matrix(&mut rng, n, 2);

    // Warm-up to amortize first-touch allocation.
    lab_mse(&dummy, &targets, 1.0).unwrap();

    let start = Instant::now();
    lab_mse(&dummy, &targets, 1.0).unwrap();
    let lab_ms = start.elapsed().as_secs_f64() * 1000.0;

    let start = Instant::now();
    lin_mse(&features, &targets, 1.0).unwrap();
    let lin_ms = start.elapsed().as_secs_f64() * 1000.0;

    assert!(lab_ms < 50.0, "lab_mse took {lab_ms:.2} ms (limit 50)");
    assert!(lin_ms < 2000.0, "lin_mse took {lin_ms:.2} ms (limit 2000)");
    assert!(
        lab_ms * 2.0 < lin_ms,
        "LabMSE ({lab_ms:.2} ms) not measurably faster than LinMSE ({lin_ms:.2} ms)"
    );
    println!("ACCEPTANCE 11: PASS (lab_mse {lab_ms:.2} ms, lin_mse {lin_ms:.2} ms)");
}
