//! Statistical layer: seeded sample-level bootstrap intervals, paired
//! deltas, Wilson score bounds, and chance-corrected agreement.
//!
//! The bootstrap resamples record indices with replacement and recomputes a
//! metric per resample; intervals are 2.5/97.5 percentile with linear
//! interpolation between order statistics. The resample index streams are
//! fully determined by the seed. The normal quantile needed by the Wilson
//! interval uses a shipped rational approximation (absolute error below
//! 1e-6), so no numerical library is involved.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::{build_matches, MetricOptions, SampleMatch};
use crate::selector::Prediction;

/// Percentile bootstrap interval around a point estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub resamples: usize,
    pub seed: u64,
    /// Resamples on which the metric was undefined and skipped.
    pub na_resamples: usize,
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// |error| < 1.2e-9 over (0, 1)).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Validation(format!(
            "normal quantile requires p in (0,1), got {p}"
        )));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    };
    Ok(x)
}

/// Upper bound of the two-sided Wilson score interval. For zero successes
/// this reduces to z^2 / (n + z^2).
pub fn wilson_upper(successes: u64, n: u64, confidence: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Validation("wilson interval requires n >= 1".into()));
    }
    if successes > n {
        return Err(Error::Validation(format!(
            "successes ({successes}) exceed n ({n})"
        )));
    }
    if !(0.0 < confidence && confidence < 1.0) {
        return Err(Error::Validation(format!(
            "confidence {confidence} outside (0,1)"
        )));
    }
    let z = normal_quantile(1.0 - (1.0 - confidence) / 2.0)?;
    let n = n as f64;
    let p_hat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok((center + half).min(1.0))
}

/// Empirical quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Core engine: resample `0..n` indices with replacement, evaluate the
/// metric per resample, and take the 95% percentile interval. The metric
/// over the identity indices must be defined (it is the point estimate);
/// undefined resamples are skipped and counted.
pub fn bootstrap_ci(
    n: usize,
    resamples: usize,
    seed: u64,
    metric: impl Fn(&[usize]) -> Option<f64>,
) -> Result<BootstrapResult> {
    if n == 0 {
        return Err(Error::Validation("bootstrap requires a non-empty sample".into()));
    }
    if resamples == 0 {
        return Err(Error::Validation("bootstrap requires at least one resample".into()));
    }
    let identity: Vec<usize> = (0..n).collect();
    let point = metric(&identity).ok_or_else(|| {
        Error::Validation("metric undefined on the full sample; nothing to bootstrap".into())
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(resamples);
    let mut na_resamples = 0usize;
    let mut indices = vec![0usize; n];
    for _ in 0..resamples {
        for slot in indices.iter_mut() {
            *slot = rng.gen_range(0..n);
        }
        match metric(&indices) {
            Some(v) => values.push(v),
            None => na_resamples += 1,
        }
    }
    if values.is_empty() {
        return Err(Error::Validation(
            "metric undefined on every bootstrap resample".into(),
        ));
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite metric values"));
    Ok(BootstrapResult {
        point,
        lower: quantile(&values, 0.025),
        upper: quantile(&values, 0.975),
        resamples,
        seed,
        na_resamples,
    })
}

/// Paired delta bootstrap: the same resample indices are applied to both
/// systems and the interval is over per-resample metric differences.
pub fn paired_bootstrap_delta(
    n: usize,
    resamples: usize,
    seed: u64,
    metric_a: impl Fn(&[usize]) -> Option<f64>,
    metric_b: impl Fn(&[usize]) -> Option<f64>,
) -> Result<BootstrapResult> {
    bootstrap_ci(n, resamples, seed, |indices| {
        Some(metric_a(indices)? - metric_b(indices)?)
    })
}

/// Precomputed per-record counts so bootstrap resamples are O(n) sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecordStats {
    pub expressed_critical: usize,
    pub unsupported_critical: usize,
    pub retained: usize,
    pub usable: usize,
    pub expressed: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub action_match: bool,
}

impl RecordStats {
    pub fn from_match(m: &SampleMatch, action_match: bool) -> RecordStats {
        let retained = m.expressed.intersection(&m.gold_usable).count();
        RecordStats {
            expressed_critical: m.expressed_critical.len(),
            unsupported_critical: m.expressed_critical.difference(&m.gold_usable).count(),
            retained,
            usable: m.gold_usable.len(),
            expressed: m.expressed.len(),
            tp: retained,
            fp: m.expressed.difference(&m.gold_usable).count(),
            fn_: m.gold_usable.difference(&m.expressed).count(),
            action_match,
        }
    }
}

/// Resampleable metrics over precomputed record stats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Uccr,
    Pau,
    PauPrecision,
    F1,
    ActionAccuracy,
}

impl MetricKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uccr" => Ok(MetricKind::Uccr),
            "pau" => Ok(MetricKind::Pau),
            "pau_precision" => Ok(MetricKind::PauPrecision),
            "f1" => Ok(MetricKind::F1),
            "action_accuracy" => Ok(MetricKind::ActionAccuracy),
            other => Err(Error::Validation(format!("unknown metric '{other}'"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Uccr => "uccr",
            MetricKind::Pau => "pau",
            MetricKind::PauPrecision => "pau_precision",
            MetricKind::F1 => "f1",
            MetricKind::ActionAccuracy => "action_accuracy",
        }
    }

    /// Pool the stats selected by `indices` and evaluate. UCCR is zero on an
    /// empty denominator by definition; the others are undefined there.
    pub fn eval(self, stats: &[RecordStats], indices: &[usize]) -> Option<f64> {
        let mut total = RecordStats::default();
        let mut matches = 0usize;
        for &i in indices {
            let s = &stats[i];
            total.expressed_critical += s.expressed_critical;
            total.unsupported_critical += s.unsupported_critical;
            total.retained += s.retained;
            total.usable += s.usable;
            total.expressed += s.expressed;
            total.tp += s.tp;
            total.fp += s.fp;
            total.fn_ += s.fn_;
            if s.action_match {
                matches += 1;
            }
        }
        match self {
            MetricKind::Uccr => {
                if total.expressed_critical == 0 {
                    Some(0.0)
                } else {
                    Some(total.unsupported_critical as f64 / total.expressed_critical as f64)
                }
            }
            MetricKind::Pau => ratio(total.retained, total.usable),
            MetricKind::PauPrecision => ratio(total.retained, total.expressed),
            MetricKind::F1 => ratio(2 * total.tp, 2 * total.tp + total.fp + total.fn_),
            MetricKind::ActionAccuracy => ratio(matches, indices.len()),
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

/// Precompute resampleable stats for an aligned run.
pub fn record_stats(
    preds: &[Prediction],
    gold: &Corpus,
    options: &MetricOptions,
) -> Result<Vec<RecordStats>> {
    let matches = build_matches(preds, gold, options)?;
    Ok(matches
        .iter()
        .zip(preds.iter().zip(gold.iter()))
        .map(|(m, (p, g))| RecordStats::from_match(m, p.action == g.gold_action))
        .collect())
}

/// Sample-level bootstrap interval for one metric of one run.
pub fn bootstrap_metric(
    kind: MetricKind,
    preds: &[Prediction],
    gold: &Corpus,
    options: &MetricOptions,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    let stats = record_stats(preds, gold, options)?;
    bootstrap_ci(stats.len(), resamples, seed, |idx| kind.eval(&stats, idx))
}

/// Paired bootstrap delta (system A minus system B) on shared resamples.
pub fn paired_bootstrap_metric(
    kind: MetricKind,
    preds_a: &[Prediction],
    preds_b: &[Prediction],
    gold: &Corpus,
    options: &MetricOptions,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    let stats_a = record_stats(preds_a, gold, options)?;
    let stats_b = record_stats(preds_b, gold, options)?;
    paired_bootstrap_delta(
        stats_a.len(),
        resamples,
        seed,
        |idx| kind.eval(&stats_a, idx),
        |idx| kind.eval(&stats_b, idx),
    )
}

/// Square label-by-label count matrix; rows are the first labeler, columns
/// the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl AgreementMatrix {
    pub fn new(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = labels.len();
        if k == 0 {
            return Err(Error::Validation("agreement matrix must be non-empty".into()));
        }
        if counts.len() != k || counts.iter().any(|row| row.len() != k) {
            return Err(Error::Validation(format!(
                "agreement matrix must be square ({k}x{k})"
            )));
        }
        let total: u64 = counts.iter().flatten().sum();
        if total == 0 {
            return Err(Error::Validation("agreement matrix has zero total count".into()));
        }
        Ok(AgreementMatrix { labels, counts })
    }

    /// Parse a TSV matrix: a header row of column labels (leading empty
    /// cell), then one row per label with counts.
    pub fn parse_tsv(contents: &str) -> Result<Self> {
        let mut lines = contents
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Validation("empty agreement matrix file".into()))?;
        let columns: Vec<String> = header
            .split('\t')
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        let mut row_labels = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in lines.enumerate() {
            let mut cells = line.split('\t');
            let label = cells
                .next()
                .ok_or_else(|| Error::parse("agreement matrix", i + 2, "missing row label"))?
                .trim()
                .to_string();
            let row: Result<Vec<u64>> = cells
                .map(|c| {
                    c.trim().parse::<u64>().map_err(|_| {
                        Error::parse("agreement matrix", i + 2, format!("bad count '{c}'"))
                    })
                })
                .collect();
            row_labels.push(label);
            counts.push(row?);
        }
        if row_labels != columns {
            return Err(Error::Validation(
                "agreement matrix row labels must match column labels in order".into(),
            ));
        }
        AgreementMatrix::new(row_labels, counts)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Observed agreement and Cohen's kappa. Kappa is not applicable when
/// chance agreement is 1 (a single occupied category on both sides).
pub fn cohens_kappa(matrix: &AgreementMatrix) -> Result<(f64, Option<f64>)> {
    let k = matrix.labels.len();
    let total = matrix.total() as f64;
    let trace: u64 = (0..k).map(|i| matrix.counts[i][i]).sum();
    let p_o = trace as f64 / total;
    let mut p_e = 0.0;
    for i in 0..k {
        let row: u64 = matrix.counts[i].iter().sum();
        let col: u64 = (0..k).map(|r| matrix.counts[r][i]).sum();
        p_e += (row as f64 / total) * (col as f64 / total);
    }
    if (1.0 - p_e).abs() < 1e-12 {
        return Ok((p_o, None));
    }
    Ok((p_o, Some((p_o - p_e) / (1.0 - p_e))))
}

/// Convenience pair of named agreement outputs for reports.
pub fn kappa_report(matrix: &AgreementMatrix) -> Result<BTreeMap<String, Option<f64>>> {
    let (agreement, kappa) = cohens_kappa(matrix)?;
    let mut out = BTreeMap::new();
    out.insert("agreement".to_string(), Some(agreement));
    out.insert("kappa".to_string(), kappa);
    out.insert("total".to_string(), Some(matrix.total() as f64));
    Ok(out)
}

/// The shipped weak-label vs audited-label agreement matrix.
pub const DEFAULT_AGREEMENT_MATRIX: &str = include_str!("../data/agreement_matrix.tsv");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_reference_values() {
        // Two-sided 95% and 99% points.
        assert!((normal_quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-7);
        assert!((normal_quantile(0.995).unwrap() - 2.5758293035489004).abs() < 1e-7);
        assert!((normal_quantile(0.5).unwrap()).abs() < 1e-9);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn wilson_zero_event_bounds() {
        let u302 = wilson_upper(0, 302, 0.95).unwrap();
        assert!((u302 - 0.0126).abs() < 1e-4, "got {u302}");
        let u306 = wilson_upper(0, 306, 0.95).unwrap();
        assert!((u306 - 0.0124).abs() < 1e-4, "got {u306}");
    }

    #[test]
    fn wilson_edge_cases() {
        assert!(wilson_upper(0, 0, 0.95).is_err());
        assert!(wilson_upper(5, 4, 0.95).is_err());
        let all = wilson_upper(10, 10, 0.95).unwrap();
        assert!((all - 1.0).abs() < 1e-12, "all successes give upper 1.0");
    }

    #[test]
    fn wilson_decreasing_in_n() {
        let mut prev = f64::INFINITY;
        for n in [10u64, 50, 100, 302, 306, 1000, 10_000] {
            let u = wilson_upper(0, n, 0.95).unwrap();
            assert!(u < prev, "upper bound must strictly decrease in n");
            prev = u;
        }
    }

    #[test]
    fn bootstrap_degenerate_distribution() {
        let result = bootstrap_ci(25, 1000, 42, |_| Some(0.375)).unwrap();
        assert_eq!(result.point, 0.375);
        assert_eq!(result.lower, 0.375);
        assert_eq!(result.upper, 0.375);
        assert_eq!(result.na_resamples, 0);
    }

    #[test]
    fn bootstrap_deterministic_for_seed() {
        let data: Vec<f64> = (0..40).map(|i| (i as f64).sin().abs()).collect();
        let metric = |idx: &[usize]| {
            Some(idx.iter().map(|&i| data[i]).sum::<f64>() / idx.len() as f64)
        };
        let a = bootstrap_ci(data.len(), 500, 9, metric).unwrap();
        let b = bootstrap_ci(data.len(), 500, 9, metric).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_ci(data.len(), 500, 10, metric).unwrap();
        assert!(a.lower != c.lower || a.upper != c.upper);
        assert!(a.lower <= a.point && a.point <= a.upper);
    }

    #[test]
    fn paired_delta_identity_and_dominance() {
        let a_vals: Vec<f64> = (0..30).map(|i| 0.5 + 0.01 * (i as f64)).collect();
        let metric_a = |idx: &[usize]| {
            Some(idx.iter().map(|&i| a_vals[i]).sum::<f64>() / idx.len() as f64)
        };
        let same = paired_bootstrap_delta(30, 400, 3, metric_a, metric_a).unwrap();
        assert_eq!(same.point, 0.0);
        assert_eq!(same.lower, 0.0);
        assert_eq!(same.upper, 0.0);

        // A strictly dominates B by 0.1 on every record.
        let metric_b = |idx: &[usize]| metric_a(idx).map(|v| v - 0.1);
        let delta = paired_bootstrap_delta(30, 400, 3, metric_a, metric_b).unwrap();
        assert!((delta.point - 0.1).abs() < 1e-12);
        assert!(delta.lower > 0.0, "dominant system gives a positive interval");
    }

    #[test]
    fn kappa_perfect_and_chance() {
        let diagonal = AgreementMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![30, 0], vec![0, 20]],
        )
        .unwrap();
        let (agreement, kappa) = cohens_kappa(&diagonal).unwrap();
        assert_eq!(agreement, 1.0);
        assert!((kappa.unwrap() - 1.0).abs() < 1e-12);

        // Independent uniform labelers agree at chance: kappa 0.
        let uniform = AgreementMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![25, 25], vec![25, 25]],
        )
        .unwrap();
        let (agreement, kappa) = cohens_kappa(&uniform).unwrap();
        assert_eq!(agreement, 0.5);
        assert!(kappa.unwrap().abs() < 1e-12);

        // A single occupied category on both sides has no chance correction.
        let degenerate =
            AgreementMatrix::new(vec!["a".into(), "b".into()], vec![vec![10, 0], vec![0, 0]])
                .unwrap();
        let (_, kappa) = cohens_kappa(&degenerate).unwrap();
        assert!(kappa.is_none());
    }

    #[test]
    fn kappa_reference_matrix() {
        let matrix = AgreementMatrix::parse_tsv(DEFAULT_AGREEMENT_MATRIX).unwrap();
        assert_eq!(matrix.total(), 100);
        let (agreement, kappa) = cohens_kappa(&matrix).unwrap();
        assert!((agreement - 0.7300).abs() < 1e-9, "agreement {agreement}");
        assert!((kappa.unwrap() - 0.5027).abs() < 5e-4, "kappa {:?}", kappa);
    }

    #[test]
    fn kappa_invariant_under_category_permutation() {
        let matrix = AgreementMatrix::parse_tsv(DEFAULT_AGREEMENT_MATRIX).unwrap();
        let k = matrix.labels.len();
        // Rotate categories by one.
        let perm: Vec<usize> = (0..k).map(|i| (i + 1) % k).collect();
        let mut counts = vec![vec![0u64; k]; k];
        for i in 0..k {
            for j in 0..k {
                counts[perm[i]][perm[j]] = matrix.counts[i][j];
            }
        }
        let labels = (0..k).map(|i| matrix.labels[(k + i - 1) % k].clone()).collect();
        let permuted = AgreementMatrix::new(labels, counts).unwrap();
        let original = cohens_kappa(&matrix).unwrap();
        let rotated = cohens_kappa(&permuted).unwrap();
        assert!((original.0 - rotated.0).abs() < 1e-12);
        assert!((original.1.unwrap() - rotated.1.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn matrix_parsing_rejects_non_square() {
        let bad = "\tfull\tcond\nfull\t1\t2\ncond\t3\n";
        assert!(AgreementMatrix::parse_tsv(bad).is_err());
        let mismatched = "\tfull\tcond\ncond\t1\t2\nfull\t3\t4\n";
        assert!(AgreementMatrix::parse_tsv(mismatched).is_err());
    }
}
