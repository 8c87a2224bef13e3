//! Statistics for judging a transferability estimator against observed
//! transfer results.
//!
//! Given one score per (source, target) pair and the matching actual
//! negative test errors, the questions are: do the scores *correlate* with
//! reality ([`pearson`], [`spearman`], [`kendall_tau`]), do they *pick good
//! sources* ([`top_k_matching_rate`]), and how tightly do actuals sit on a
//! line through the scores ([`linear_fit_rmse`])?
//!
//! Conventions fixed here:
//!
//! - Kendall's τ is the tie-corrected **τ-b** variant, computed by
//!   merge-sort inversion counting in `O(n log n)`;
//! - Spearman assigns tied values their **average rank**;
//! - p-values are computed for Pearson only (exact two-sided tail of the
//!   `t` transform, via the regularized incomplete beta function);
//! - the top-k argmax breaks score ties toward the lowest source index and
//!   flags the tie in the report.

use std::fmt;

use crate::numkit::Matrix;

/// Which correlation a report carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Pearson,
    Spearman,
    Kendall,
}

impl MetricKind {
    /// Stable lowercase token used in CLI flags and JSON output.
    pub fn token(&self) -> &'static str {
        match self {
            MetricKind::Pearson => "pearson",
            MetricKind::Spearman => "spearman",
            MetricKind::Kendall => "kendall",
        }
    }

    /// All metrics, in a fixed order.
    pub fn all() -> [MetricKind; 3] {
        [MetricKind::Pearson, MetricKind::Spearman, MetricKind::Kendall]
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(MetricKind::Pearson),
            "spearman" => Ok(MetricKind::Spearman),
            "kendall" => Ok(MetricKind::Kendall),
            other => Err(format!(
                "unknown metric '{other}' (expected pearson, spearman, or kendall)"
            )),
        }
    }
}

/// A computed correlation.
#[derive(Debug, Clone, Copy)]
pub struct CorrelationReport {
    pub metric: MetricKind,
    /// The coefficient, in `[-1, 1]`.
    pub value: f64,
    /// Number of paired observations.
    pub n_pairs: usize,
    /// Two-sided p-value; present for Pearson only.
    pub p_value: Option<f64>,
}

/// Errors from the metrics layer.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricError {
    /// Paired vectors have different lengths.
    LengthMismatch { left: usize, right: usize },
    /// Fewer than two observations.
    TooFew { n: usize },
    /// A correlation input has zero variance (all values equal).
    ConstantInput { which: &'static str },
    /// A matrix argument has the wrong shape.
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// `k` is zero or exceeds the number of sources.
    KOutOfRange { k: usize, sources: usize },
    /// An input value was NaN or infinite.
    NonFinite,
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::LengthMismatch { left, right } => {
                write!(f, "paired vectors differ in length: {left} vs {right}")
            }
            MetricError::TooFew { n } => {
                write!(f, "need at least 2 paired observations, got {n}")
            }
            MetricError::ConstantInput { which } => {
                write!(f, "degenerate input: {which} is constant")
            }
            MetricError::ShapeMismatch { expected, found } => write!(
                f,
                "matrix shape mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            MetricError::KOutOfRange { k, sources } => {
                write!(f, "k = {k} is out of range for {sources} sources")
            }
            MetricError::NonFinite => write!(f, "inputs must contain only finite values"),
        }
    }
}

impl std::error::Error for MetricError {}

fn validate_pair(x: &[f64], y: &[f64]) -> Result<(), MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(MetricError::TooFew { n: x.len() });
    }
    if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Sample Pearson correlation with an exact two-sided p-value.
///
/// The p-value is the tail probability of the `t` transform
/// `t = r·√((n−2)/(1−r²))`, evaluated as `I_{1−r²}(ν/2, 1/2)` with
/// `ν = n − 2` — the exact closed form of the two-sided `t` tail. It is
/// accurate to about `1e-8` over the full usable range (`n ≤ 10⁶`).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationReport, MetricError> {
    validate_pair(x, y)?;
    if is_constant(x) {
        return Err(MetricError::ConstantInput { which: "x" });
    }
    if is_constant(y) {
        return Err(MetricError::ConstantInput { which: "y" });
    }
    let n = x.len();
    let mean_x: f64 = x.iter().sum::<f64>() / n as f64;
    let mean_y: f64 = y.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for i in 0..n {
        let dx = x[i] - mean_x;
        let dy = y[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    let r = (cov / (var_x.sqrt() * var_y.sqrt())).clamp(-1.0, 1.0);
    Ok(CorrelationReport {
        metric: MetricKind::Pearson,
        value: r,
        n_pairs: n,
        p_value: Some(pearson_p_value(r, n)),
    })
}

/// Two-sided p-value for a Pearson coefficient at sample size `n`.
fn pearson_p_value(r: f64, n: usize) -> f64 {
    if n <= 2 {
        return 1.0;
    }
    // 1 − r² computed as a product to avoid cancellation near |r| = 1.
    let one_minus_r_sq = (1.0 - r) * (1.0 + r);
    if one_minus_r_sq <= 0.0 {
        return 0.0;
    }
    let nu = (n - 2) as f64;
    incomplete_beta(nu / 2.0, 0.5, one_minus_r_sq).clamp(0.0, 1.0)
}

/// Spearman rank correlation: Pearson applied to average-rank vectors.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationReport, MetricError> {
    validate_pair(x, y)?;
    if is_constant(x) {
        return Err(MetricError::ConstantInput { which: "x" });
    }
    if is_constant(y) {
        return Err(MetricError::ConstantInput { which: "y" });
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let inner = pearson(&rx, &ry)?;
    Ok(CorrelationReport {
        metric: MetricKind::Spearman,
        value: inner.value,
        n_pairs: x.len(),
        p_value: None,
    })
}

/// Ranks with ties mapped to the average of the positions they occupy
/// (1-based).
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("ranks: non-finite input"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the average 1-based rank.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Kendall's τ-b (tie-corrected), computed in `O(n log n)`.
///
/// The pair counts come from sorting by `(x, y)` and counting strict
/// inversions of the `y` sequence with a merge sort: after that sort,
/// inversions are exactly the discordant pairs. Tie-pair counts in `x`, `y`,
/// and jointly are read off run lengths, giving
/// `τ-b = (n₀ − n₁ − n₂ + n₃ − 2·inversions) / √((n₀−n₁)(n₀−n₂))`
/// where `n₀` is the total pair count and `n₁`, `n₂`, `n₃` the tie-pair
/// counts in `x`, in `y`, and in both.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<CorrelationReport, MetricError> {
    validate_pair(x, y)?;
    if is_constant(x) {
        return Err(MetricError::ConstantInput { which: "x" });
    }
    if is_constant(y) {
        return Err(MetricError::ConstantInput { which: "y" });
    }
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .expect("kendall: non-finite input")
            .then(y[a].partial_cmp(&y[b]).expect("kendall: non-finite input"))
    });

    let pair_count = |t: u64| t * (t - 1) / 2;
    let n0 = pair_count(n as u64);

    // Tie-pair counts in x and jointly in (x, y), from runs in sorted order.
    let mut n1: u64 = 0;
    let mut n3: u64 = 0;
    {
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && x[order[j + 1]] == x[order[i]] {
                j += 1;
            }
            n1 += pair_count((j - i + 1) as u64);
            // Joint ties are runs of equal y inside this x run (y is sorted
            // within the run).
            let mut a = i;
            while a <= j {
                let mut b = a;
                while b + 1 <= j && y[order[b + 1]] == y[order[a]] {
                    b += 1;
                }
                n3 += pair_count((b - a + 1) as u64);
                a = b + 1;
            }
            i = j + 1;
        }
    }

    // Tie-pair counts in y, from a sorted copy.
    let mut y_sorted: Vec<f64> = y.to_vec();
    y_sorted.sort_by(|a, b| a.partial_cmp(b).expect("kendall: non-finite input"));
    let mut n2: u64 = 0;
    {
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && y_sorted[j + 1] == y_sorted[i] {
                j += 1;
            }
            n2 += pair_count((j - i + 1) as u64);
            i = j + 1;
        }
    }

    if n0 == n1 || n0 == n2 {
        // Can only happen with all values tied, which the constant checks
        // above already rejected; kept as a safeguard.
        return Err(MetricError::ConstantInput { which: "x or y" });
    }

    // Discordant pairs: strict inversions of y in (x, y) order.
    let mut y_seq: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let inversions = count_inversions(&mut y_seq);

    let numerator = n0 as i128 - n1 as i128 - n2 as i128 + n3 as i128 - 2 * inversions as i128;
    let denominator = ((n0 - n1) as f64).sqrt() * ((n0 - n2) as f64).sqrt();
    let value = (numerator as f64 / denominator).clamp(-1.0, 1.0);
    Ok(CorrelationReport {
        metric: MetricKind::Kendall,
        value,
        n_pairs: n,
        p_value: None,
    })
}

/// Counts strict inversions (`left > right`) while merge-sorting in place.
fn count_inversions(vals: &mut [f64]) -> u64 {
    let mut buf = vals.to_vec();
    merge_count(vals, &mut buf)
}

/// Recursive merge sort on `vals` using `buf` as scratch, returning the
/// inversion count.
fn merge_count(vals: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = vals.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let mut count = 0;
    {
        let (left, right) = vals.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count += merge_count(left, bl);
        count += merge_count(right, br);
    }
    // Merge vals[..mid] and vals[mid..] into buf, counting cross inversions.
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if vals[i] <= vals[j] {
            buf[k] = vals[i];
            i += 1;
        } else {
            // vals[i] > vals[j]: everything left in the first half inverts
            // with vals[j].
            count += (mid - i) as u64;
            buf[k] = vals[j];
            j += 1;
        }
        k += 1;
    }
    while i < mid {
        buf[k] = vals[i];
        i += 1;
        k += 1;
    }
    while j < n {
        buf[k] = vals[j];
        j += 1;
        k += 1;
    }
    vals.copy_from_slice(&buf[..n]);
    count
}

/// Per-target outcome of source selection.
#[derive(Debug, Clone)]
pub struct TargetSelection {
    /// Target column index.
    pub target: usize,
    /// Source picked by the estimator (argmax of its column; lowest index on
    /// ties).
    pub selected_source: usize,
    /// True when two or more sources tied for the estimator argmax.
    pub selection_tied: bool,
    /// The `k` sources with the highest actual values, best first (ties
    /// broken toward the lowest index).
    pub top_actual_sources: Vec<usize>,
    /// Whether the selected source's actual value reaches the k-th best.
    pub matched: bool,
}

/// Outcome of [`top_k_matching_rate`].
#[derive(Debug, Clone)]
pub struct TopKReport {
    /// `m_match / m_target`.
    pub rate: f64,
    /// Number of targets where the selection landed in the top k.
    pub m_match: usize,
    /// Total number of targets.
    pub m_target: usize,
    /// The `k` the report was computed for.
    pub k: usize,
    /// Per-target details.
    pub per_target: Vec<TargetSelection>,
}

/// Fraction of targets for which the estimator's chosen source is among the
/// `k` sources with the best actual outcome.
///
/// Both matrices are `sources × targets`. For each target column the
/// estimator's pick is its argmax; it matches when its **actual** value is at
/// least the k-th largest actual value in the column, so sources tied with
/// the k-th best count as matches.
pub fn top_k_matching_rate(
    estimator_scores: &Matrix,
    actual_neg_mse: &Matrix,
    k: usize,
) -> Result<TopKReport, MetricError> {
    let shape = (estimator_scores.rows(), estimator_scores.cols());
    if shape != (actual_neg_mse.rows(), actual_neg_mse.cols()) {
        return Err(MetricError::ShapeMismatch {
            expected: shape,
            found: (actual_neg_mse.rows(), actual_neg_mse.cols()),
        });
    }
    let (n_sources, n_targets) = shape;
    if n_sources == 0 || n_targets == 0 {
        return Err(MetricError::TooFew { n: 0 });
    }
    if k == 0 || k > n_sources {
        return Err(MetricError::KOutOfRange { k, sources: n_sources });
    }

    let mut per_target = Vec::with_capacity(n_targets);
    let mut m_match = 0;
    for j in 0..n_targets {
        // Estimator pick: argmax with lowest-index tie-break.
        let mut selected = 0;
        let mut best_score = estimator_scores.get(0, j);
        let mut tied = false;
        for i in 1..n_sources {
            let s = estimator_scores.get(i, j);
            if s > best_score {
                best_score = s;
                selected = i;
                tied = false;
            } else if s == best_score {
                tied = true;
            }
        }

        // Actually-best k sources: sort by (descending actual, ascending
        // index).
        let mut by_actual: Vec<usize> = (0..n_sources).collect();
        by_actual.sort_by(|&a, &b| {
            actual_neg_mse
                .get(b, j)
                .partial_cmp(&actual_neg_mse.get(a, j))
                .expect("top_k: non-finite actual value")
                .then(a.cmp(&b))
        });
        let top_actual_sources: Vec<usize> = by_actual[..k].to_vec();
        let kth_value = actual_neg_mse.get(by_actual[k - 1], j);
        let matched = actual_neg_mse.get(selected, j) >= kth_value;
        if matched {
            m_match += 1;
        }
        per_target.push(TargetSelection {
            target: j,
            selected_source: selected,
            selection_tied: tied,
            top_actual_sources,
            matched,
        });
    }
    Ok(TopKReport {
        rate: m_match as f64 / n_targets as f64,
        m_match,
        m_target: n_targets,
        k,
        per_target,
    })
}

/// RMSE of the 1-D least-squares fit `actual ≈ α·score + β`.
///
/// Measures how close the (score, actual) points sit to a straight line —
/// lower is better. The intercept absorbs constant shifts of `actual`.
pub fn linear_fit_rmse(scores: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    validate_pair(scores, actual)?;
    if is_constant(scores) {
        return Err(MetricError::ConstantInput { which: "scores" });
    }
    let n = scores.len() as f64;
    let mean_s: f64 = scores.iter().sum::<f64>() / n;
    let mean_a: f64 = actual.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_s = 0.0;
    for i in 0..scores.len() {
        let ds = scores[i] - mean_s;
        cov += ds * (actual[i] - mean_a);
        var_s += ds * ds;
    }
    let alpha = cov / var_s;
    let beta = mean_a - alpha * mean_s;
    let mut sq = 0.0;
    for i in 0..scores.len() {
        let r = actual[i] - (alpha * scores[i] + beta);
        sq += r * r;
    }
    Ok((sq / n).sqrt())
}

// ---------------------------------------------------------------------------
// Special functions for the Pearson p-value.
// ---------------------------------------------------------------------------

/// Natural log of the gamma function (Lanczos approximation, g = 7, 9
/// coefficients; relative accuracy ~1e-15 on the positive axis).
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π/sin(πx).
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta function `I_x(a, b)` by continued fraction
/// (modified Lentz), with the symmetry transform for fast convergence.
fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta (modified Lentz's method).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m_f = m as f64;
        let m2 = 2.0 * m_f;
        // Even step.
        let aa = m_f * (b - m_f) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // Odd step.
        let aa = -(a + m_f) * (qab + m_f) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn pearson_exact_affine_cases() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-12);
        let r = pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap();
        assert!((r.value + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pearson_half_fixture() {
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((r.value - 0.5).abs() <= 1e-12);
        assert_eq!(r.n_pairs, 3);
        // With n = 3 the t transform has one degree of freedom (a Cauchy
        // tail), whose two-sided p-value at r = 0.5 is exactly 2/3.
        let p = r.p_value.unwrap();
        assert!((p - 2.0 / 3.0).abs() <= 1e-10, "p = {p}");
    }

    #[test]
    fn pearson_p_value_closed_form_two_dof() {
        // With n = 4 (two degrees of freedom) the two-sided p-value is
        // exactly 1 − |r|.
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.3, 0.1, 1.9, 1.7]; // something with a mild correlation
        let r = pearson(&x, &y).unwrap();
        let p = r.p_value.unwrap();
        assert!(
            (p - (1.0 - r.value.abs())).abs() <= 1e-10,
            "r = {}, p = {p}",
            r.value
        );
    }

    #[test]
    fn pearson_p_value_properties() {
        // Symmetric in the sign of r, decreasing in |r|, and in [0, 1].
        let base = [0.1, 0.9, 0.4, 0.7, 0.2, 0.8, 0.35, 0.65];
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let r_pos = pearson(&x, &base).unwrap();
        let neg: Vec<f64> = base.iter().map(|v| -v).collect();
        let r_neg = pearson(&x, &neg).unwrap();
        assert!((r_pos.value + r_neg.value).abs() <= 1e-12);
        assert!((r_pos.p_value.unwrap() - r_neg.p_value.unwrap()).abs() <= 1e-12);

        let strong = [1.0, 2.1, 2.9, 4.2, 4.8, 6.1, 6.9, 8.05];
        let r_strong = pearson(&x, &strong).unwrap();
        assert!(r_strong.value.abs() > r_pos.value.abs());
        assert!(r_strong.p_value.unwrap() < r_pos.p_value.unwrap());
        for p in [r_pos.p_value.unwrap(), r_strong.p_value.unwrap()] {
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn pearson_p_value_vanishes_at_perfect_correlation() {
        // r lands within an ulp of 1 (the two square roots in the
        // denominator each round), so p is vanishingly small rather than an
        // exact zero.
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 6.0, 8.0]).unwrap();
        let p = r.p_value.unwrap();
        assert!((0.0..=1e-12).contains(&p), "p = {p}");
    }

    #[test]
    fn pearson_rejects_degenerate_and_mismatched() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(MetricError::ConstantInput { .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert!(matches!(
            pearson(&[1.0], &[1.0]),
            Err(MetricError::TooFew { .. })
        ));
    }

    #[test]
    fn spearman_monotone_is_one() {
        let x: [f64; 4] = [0.5, 1.5, 2.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let r = spearman(&x, &y).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-12);
        assert!(r.p_value.is_none());
    }

    #[test]
    fn spearman_half_fixture() {
        let r = spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((r.value - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn spearman_with_ties_matches_rank_then_pearson_oracle() {
        let x = [1.0, 2.0, 2.0, 3.0, 5.0, 5.0, 5.0];
        let y = [2.0, 1.0, 4.0, 4.0, 6.0, 5.5, 8.0];
        let fast = spearman(&x, &y).unwrap();
        let oracle = pearson(&average_ranks(&x), &average_ranks(&y)).unwrap();
        assert!((fast.value - oracle.value).abs() <= 1e-12);
    }

    #[test]
    fn average_ranks_handles_ties() {
        let r = average_ranks(&[10.0, 20.0, 20.0, 30.0]);
        assert_eq!(r, vec![1.0, 2.5, 2.5, 4.0]);
    }

    /// O(n²) pair-enumeration oracle for τ-b.
    fn kendall_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut concordant, mut discordant) = (0i64, 0i64);
        let (mut ties_x, mut ties_y) = (0i64, 0i64);
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = x[i] - x[j];
                let dy = y[i] - y[j];
                if dx == 0.0 && dy == 0.0 {
                    ties_x += 1;
                    ties_y += 1;
                } else if dx == 0.0 {
                    ties_x += 1;
                } else if dy == 0.0 {
                    ties_y += 1;
                } else if dx * dy > 0.0 {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
        let n0 = (n * (n - 1) / 2) as i64;
        let denom = (((n0 - ties_x) as f64) * ((n0 - ties_y) as f64)).sqrt();
        (concordant - discordant) as f64 / denom
    }

    #[test]
    fn kendall_third_fixture() {
        let r = kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() <= 1e-12, "τ = {}", r.value);
    }

    #[test]
    fn kendall_identity_is_one() {
        let x = [3.0, 1.0, 4.0, 1.5, 9.0];
        let r = kendall_tau(&x, &x).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn kendall_fast_path_matches_oracle_with_ties() {
        let mut rng = Rng::new(321);
        for trial in 0..30 {
            let n = 5 + (trial * 7) % 200;
            // Coarse quantization forces plenty of ties.
            let x: Vec<f64> = (0..n)
                .map(|_| (rng.next_f64() * 8.0).floor())
                .collect();
            let y: Vec<f64> = (0..n)
                .map(|_| (rng.next_f64() * 8.0).floor())
                .collect();
            if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
                continue;
            }
            let fast = kendall_tau(&x, &y).unwrap();
            let slow = kendall_oracle(&x, &y);
            assert!(
                (fast.value - slow).abs() <= 1e-12,
                "trial {trial}: fast {} vs oracle {slow}",
                fast.value
            );
        }
    }

    #[test]
    fn kendall_rejects_all_tied() {
        assert!(matches!(
            kendall_tau(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(MetricError::ConstantInput { .. })
        ));
    }

    #[test]
    fn correlations_are_symmetric_in_their_arguments() {
        let x = [0.3, 1.8, 0.9, 2.7, 1.1];
        let y = [5.0, 2.0, 4.4, 1.0, 3.3];
        assert!(
            (pearson(&x, &y).unwrap().value - pearson(&y, &x).unwrap().value).abs() <= 1e-15
        );
        assert!(
            (spearman(&x, &y).unwrap().value - spearman(&y, &x).unwrap().value).abs() <= 1e-15
        );
        assert!(
            (kendall_tau(&x, &y).unwrap().value - kendall_tau(&y, &x).unwrap().value).abs()
                <= 1e-15
        );
    }

    fn three_by_two_fixture() -> (Matrix, Matrix) {
        // Target 0: estimator picks the actually-2nd-best source (index 1).
        // Target 1: estimator picks the actually-best source (index 1).
        let estimator = Matrix::from_rows(&[
            vec![0.5, 0.2],
            vec![0.9, 0.8],
            vec![0.1, 0.3],
        ]);
        let actual = Matrix::from_rows(&[
            vec![-0.1, -0.5],
            vec![-0.2, -0.1],
            vec![-0.3, -0.4],
        ]);
        (estimator, actual)
    }

    #[test]
    fn top_k_identity_rate_is_one() {
        let m = Matrix::from_rows(&[
            vec![-0.1, -0.9],
            vec![-0.4, -0.2],
            vec![-0.7, -0.5],
        ]);
        for k in 1..=3 {
            let r = top_k_matching_rate(&m, &m, k).unwrap();
            assert_eq!(r.rate, 1.0, "k = {k}");
            assert_eq!(r.m_match, 2);
            assert_eq!(r.m_target, 2);
        }
    }

    #[test]
    fn top_k_constructed_fixture() {
        let (est, act) = three_by_two_fixture();
        let top1 = top_k_matching_rate(&est, &act, 1).unwrap();
        assert_eq!(top1.m_match, 1);
        assert!((top1.rate - 0.5).abs() <= 1e-15);
        assert_eq!(top1.per_target[0].selected_source, 1);
        assert_eq!(top1.per_target[0].top_actual_sources, vec![0]);
        assert!(!top1.per_target[0].matched);
        assert!(top1.per_target[1].matched);

        let top2 = top_k_matching_rate(&est, &act, 2).unwrap();
        assert_eq!(top2.m_match, 2);
        assert_eq!(top2.rate, 1.0);
    }

    #[test]
    fn top_k_reversed_estimator_misses() {
        let (_, act) = three_by_two_fixture();
        // Negating the actuals makes the estimator pick the worst source.
        let mut reversed = act.clone();
        reversed.scale(-1.0);
        let r = top_k_matching_rate(&reversed, &act, 1).unwrap();
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn top_k_rate_non_decreasing_in_k() {
        let mut rng = Rng::new(88);
        for _ in 0..20 {
            let sources = 3 + rng.next_below(5) as usize;
            let targets = 2 + rng.next_below(4) as usize;
            let data_a: Vec<f64> = (0..sources * targets).map(|_| rng.next_normal()).collect();
            let data_b: Vec<f64> = (0..sources * targets).map(|_| rng.next_normal()).collect();
            let est = Matrix::from_vec(sources, targets, data_a).unwrap();
            let act = Matrix::from_vec(sources, targets, data_b).unwrap();
            let mut prev = 0.0;
            for k in 1..=sources {
                let r = top_k_matching_rate(&est, &act, k).unwrap();
                assert!(r.rate >= prev, "rate must not decrease in k");
                prev = r.rate;
            }
            assert_eq!(prev, 1.0, "rate must reach 1 at k = sources");
        }
    }

    #[test]
    fn top_k_flags_selection_ties() {
        let est = Matrix::from_rows(&[vec![0.7], vec![0.7], vec![0.1]]);
        let act = Matrix::from_rows(&[vec![-0.2], vec![-0.1], vec![-0.3]]);
        let r = top_k_matching_rate(&est, &act, 1).unwrap();
        // Lowest index wins the tie, and the tie is reported.
        assert_eq!(r.per_target[0].selected_source, 0);
        assert!(r.per_target[0].selection_tied);
        assert!(!r.per_target[0].matched);
    }

    #[test]
    fn top_k_validates_arguments() {
        let (est, act) = three_by_two_fixture();
        assert!(matches!(
            top_k_matching_rate(&est, &act, 0),
            Err(MetricError::KOutOfRange { .. })
        ));
        assert!(matches!(
            top_k_matching_rate(&est, &act, 4),
            Err(MetricError::KOutOfRange { .. })
        ));
        let wrong = Matrix::zeros(2, 2);
        assert!(matches!(
            top_k_matching_rate(&est, &wrong, 1),
            Err(MetricError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn linear_fit_rmse_fixtures() {
        // Collinear points fit exactly.
        let s = [0.0, 1.0, 2.0, 3.0];
        let a: Vec<f64> = s.iter().map(|v| 2.0 * v - 1.0).collect();
        assert!(linear_fit_rmse(&s, &a).unwrap() <= 1e-12);

        // The hat-shaped fixture: best line is flat at 1/3, so the RMSE is
        // √(2/9).
        let rmse = linear_fit_rmse(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!((rmse - (2.0f64 / 9.0).sqrt()).abs() <= 1e-12, "rmse {rmse}");

        // Constant shifts of the dependent variable are absorbed.
        let shifted: Vec<f64> = [0.0, 1.0, 0.0].iter().map(|v| v + 5.0).collect();
        let rmse2 = linear_fit_rmse(&[0.0, 1.0, 2.0], &shifted).unwrap();
        assert!((rmse - rmse2).abs() <= 1e-12);

        assert!(matches!(
            linear_fit_rmse(&[1.0, 1.0], &[0.0, 1.0]),
            Err(MetricError::ConstantInput { .. })
        ));
    }

    #[test]
    fn incomplete_beta_reference_points() {
        // I_x(1/2, 1/2) is the arcsine CDF: (2/π)·asin(√x).
        for &x in &[0.1f64, 0.25, 0.5, 0.75, 0.9] {
            let expect = 2.0 / std::f64::consts::PI * x.sqrt().asin();
            let got = incomplete_beta(0.5, 0.5, x);
            assert!((got - expect).abs() <= 1e-10, "I_{x}(.5,.5) = {got}");
        }
        // I_x(1, b) = 1 − (1−x)^b.
        for &x in &[0.2, 0.6, 0.95] {
            let expect = 1.0 - (1.0f64 - x).powf(2.5);
            let got = incomplete_beta(1.0, 2.5, x);
            assert!((got - expect).abs() <= 1e-12);
        }
        // Symmetry: I_x(a,b) = 1 − I_{1−x}(b,a).
        let lhs = incomplete_beta(3.0, 1.7, 0.3);
        let rhs = 1.0 - incomplete_beta(1.7, 3.0, 0.7);
        assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn ln_gamma_reference_points() {
        // Γ(1) = Γ(2) = 1; Γ(1/2) = √π; Γ(5) = 24.
        assert!(ln_gamma(1.0).abs() <= 1e-13);
        assert!(ln_gamma(2.0).abs() <= 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() <= 1e-13);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() <= 1e-12);
    }
}
