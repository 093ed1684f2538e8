//! Certificate metric suite with sample-scoped claim matching.
//!
//! Claim identifiers are template ids reused across records, so all set
//! operations are scoped to one record: per record we intersect the
//! predicted expressed set (statuses certified/condition_limited, claim ids
//! de-duplicated) with the gold-usable set (gold statuses in the same pair).
//! Counts are pooled across records (micro aggregation) by default; a macro
//! mode averaging per-record values is exposed as an option.
//!
//! Empty denominators surface as a distinct not-applicable state, never as
//! 0.0 — with one exception fixed by definition: the unsupported critical
//! claim rate is zero when no critical claim is expressed at all. Action-only
//! runs (every prediction carrying an empty decision list) report
//! not-applicable for all certificate metrics and a number only for action
//! accuracy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{Corpus, QARecord};
use crate::error::{Error, Result};
use crate::label::StatusLabel;
use crate::selector::Prediction;

/// A metric value or an explicit not-applicable marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    NotApplicable,
}

impl Metric {
    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            Metric::NotApplicable => None,
        }
    }

    fn from_ratio(numerator: f64, denominator: f64) -> Metric {
        if denominator == 0.0 {
            Metric::NotApplicable
        } else {
            Metric::Value(numerator / denominator)
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Value(v) => write!(f, "{v:.4}"),
            Metric::NotApplicable => f.write_str("--"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Metric::Value(v) => ser.serialize_f64(*v),
            Metric::NotApplicable => ser.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        Ok(match Option::<f64>::deserialize(de)? {
            Some(v) => Metric::Value(v),
            None => Metric::NotApplicable,
        })
    }
}

/// Per-record claim sets used by every certificate metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatch {
    pub id: String,
    pub expressed: BTreeSet<String>,
    pub gold_usable: BTreeSet<String>,
    pub expressed_critical: BTreeSet<String>,
    pub gold_critical: BTreeSet<String>,
}

impl SampleMatch {
    /// Build the per-record sets from an aligned prediction/gold pair.
    /// Criticality of a predicted claim comes from its own decision (the
    /// skeleton metadata); gold criticality comes from the gold claim.
    pub fn build(pred: &Prediction, record: &QARecord, options: &MetricOptions) -> SampleMatch {
        let expressed_status = |status: StatusLabel| {
            status.is_expressed()
                || (options.include_conflicting_as_expressed && status == StatusLabel::Conflicting)
        };
        let mut expressed = BTreeSet::new();
        let mut expressed_critical = BTreeSet::new();
        for decision in &pred.decisions {
            if expressed_status(decision.status) {
                expressed.insert(decision.claim_id.clone());
                if decision.critical {
                    expressed_critical.insert(decision.claim_id.clone());
                }
            }
        }
        let mut gold_usable = BTreeSet::new();
        let mut gold_critical = BTreeSet::new();
        for claim in &record.gold_claims {
            if claim.is_usable() {
                gold_usable.insert(claim.claim_id.clone());
            }
            if claim.critical {
                gold_critical.insert(claim.claim_id.clone());
            }
        }
        SampleMatch {
            id: record.id.clone(),
            expressed,
            gold_usable,
            expressed_critical,
            gold_critical,
        }
    }
}

/// Metric computation switches.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricOptions {
    /// Count conflicting claims as expressed (off by default: conflicting
    /// claims surface through the conflict action, not the expressed set).
    pub include_conflicting_as_expressed: bool,
    /// Average per-record values instead of pooling counts.
    pub macro_average: bool,
}

/// Check id alignment and build the per-record match sets.
pub fn build_matches(
    preds: &[Prediction],
    gold: &Corpus,
    options: &MetricOptions,
) -> Result<Vec<SampleMatch>> {
    if preds.len() != gold.len() {
        return Err(Error::Mismatch(format!(
            "{} predictions vs {} gold records",
            preds.len(),
            gold.len()
        )));
    }
    preds
        .iter()
        .zip(gold.iter())
        .map(|(p, g)| {
            if p.id != g.id {
                Err(Error::Mismatch(format!(
                    "prediction id '{}' does not match gold id '{}'",
                    p.id, g.id
                )))
            } else {
                Ok(SampleMatch::build(p, g, options))
            }
        })
        .collect()
}

/// Unsupported critical claim rate: pooled fraction of expressed critical
/// claims outside the gold-usable set; zero when none are expressed.
pub fn compute_uccr(matches: &[SampleMatch]) -> f64 {
    let mut unsupported = 0usize;
    let mut expressed = 0usize;
    for m in matches {
        expressed += m.expressed_critical.len();
        unsupported += m.expressed_critical.difference(&m.gold_usable).count();
    }
    if expressed == 0 {
        0.0
    } else {
        unsupported as f64 / expressed as f64
    }
}

/// Retained-utility recall: pooled |expressed ∩ gold_usable| / |gold_usable|.
pub fn compute_pau(matches: &[SampleMatch]) -> Metric {
    let mut retained = 0usize;
    let mut usable = 0usize;
    for m in matches {
        retained += m.expressed.intersection(&m.gold_usable).count();
        usable += m.gold_usable.len();
    }
    Metric::from_ratio(retained as f64, usable as f64)
}

/// Precision counterpart: pooled |expressed ∩ gold_usable| / |expressed|.
pub fn compute_pau_precision(matches: &[SampleMatch]) -> Metric {
    let mut retained = 0usize;
    let mut expressed = 0usize;
    for m in matches {
        retained += m.expressed.intersection(&m.gold_usable).count();
        expressed += m.expressed.len();
    }
    Metric::from_ratio(retained as f64, expressed as f64)
}

/// Pooled micro-F1 over per-record TP/FP/FN.
pub fn compute_f1(matches: &[SampleMatch]) -> Metric {
    let (tp, fp, fn_) = pooled_counts(matches);
    let denominator = 2 * tp + fp + fn_;
    Metric::from_ratio(2.0 * tp as f64, denominator as f64)
}

fn pooled_counts(matches: &[SampleMatch]) -> (usize, usize, usize) {
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for m in matches {
        tp += m.expressed.intersection(&m.gold_usable).count();
        fp += m.expressed.difference(&m.gold_usable).count();
        fn_ += m.gold_usable.difference(&m.expressed).count();
    }
    (tp, fp, fn_)
}

/// Exact-match action accuracy over aligned predictions.
pub fn compute_action_accuracy(preds: &[Prediction], gold: &Corpus) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Mismatch("no predictions to score".into()));
    }
    if preds.len() != gold.len() {
        return Err(Error::Mismatch(format!(
            "{} predictions vs {} gold records",
            preds.len(),
            gold.len()
        )));
    }
    let mut correct = 0usize;
    for (p, g) in preds.iter().zip(gold.iter()) {
        if p.id != g.id {
            return Err(Error::Mismatch(format!(
                "prediction id '{}' does not match gold id '{}'",
                p.id, g.id
            )));
        }
        if p.action == g.gold_action {
            correct += 1;
        }
    }
    Ok(correct as f64 / preds.len() as f64)
}

/// Pooled counts carried in a report for auditability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCounts {
    pub n_records: usize,
    pub expressed: usize,
    pub expressed_critical: usize,
    pub gold_usable: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// The full metric suite for one run or one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub uccr: Metric,
    pub pau: Metric,
    pub pau_precision: Metric,
    pub f1: Metric,
    pub action_accuracy: Metric,
    pub counts: MetricCounts,
    /// Slices with fewer than 20 records are reported descriptively.
    pub descriptive: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub slices: Option<BTreeMap<String, MetricReport>>,
}

/// Report slice keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceKey {
    SourceType,
    ClaimType,
    Intent,
}

impl SliceKey {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "source_type" => Ok(SliceKey::SourceType),
            "claim_type" => Ok(SliceKey::ClaimType),
            "intent" => Ok(SliceKey::Intent),
            other => Err(Error::Validation(format!("unknown slice key '{other}'"))),
        }
    }

    fn value_of(self, record: &QARecord) -> String {
        match self {
            SliceKey::SourceType => record.source_type.as_str().to_string(),
            SliceKey::ClaimType => record
                .root_claim_type()
                .map(|t| t.as_str().to_string())
                .unwrap_or_else(|| "none".to_string()),
            SliceKey::Intent => record.question_intent.as_string(),
        }
    }
}

const DESCRIPTIVE_SLICE_LIMIT: usize = 20;

fn macro_metric(matches: &[SampleMatch], per_record: impl Fn(&SampleMatch) -> Metric) -> Metric {
    let values: Vec<f64> = matches.iter().filter_map(|m| per_record(m).value()).collect();
    if values.is_empty() {
        Metric::NotApplicable
    } else {
        Metric::Value(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Compute the metric suite over aligned predictions and gold records.
pub fn compute_report(
    preds: &[Prediction],
    gold: &Corpus,
    options: &MetricOptions,
) -> Result<MetricReport> {
    if preds.is_empty() {
        return Err(Error::Mismatch("cannot report on an empty run".into()));
    }
    let matches = build_matches(preds, gold, options)?;
    let action_accuracy = Metric::Value(compute_action_accuracy(preds, gold)?);
    let (tp, fp, fn_) = pooled_counts(&matches);
    let counts = MetricCounts {
        n_records: matches.len(),
        expressed: matches.iter().map(|m| m.expressed.len()).sum(),
        expressed_critical: matches.iter().map(|m| m.expressed_critical.len()).sum(),
        gold_usable: matches.iter().map(|m| m.gold_usable.len()).sum(),
        tp,
        fp,
        fn_,
    };

    // Action-only controls never produce claim decisions; certificate
    // metrics do not apply to them.
    let action_only = preds.iter().all(|p| p.decisions.is_empty());
    let (uccr, pau, pau_precision, f1) = if action_only {
        (
            Metric::NotApplicable,
            Metric::NotApplicable,
            Metric::NotApplicable,
            Metric::NotApplicable,
        )
    } else if options.macro_average {
        (
            Metric::Value(macro_uccr(&matches)),
            macro_metric(&matches, |m| {
                Metric::from_ratio(
                    m.expressed.intersection(&m.gold_usable).count() as f64,
                    m.gold_usable.len() as f64,
                )
            }),
            macro_metric(&matches, |m| {
                Metric::from_ratio(
                    m.expressed.intersection(&m.gold_usable).count() as f64,
                    m.expressed.len() as f64,
                )
            }),
            macro_metric(&matches, |m| compute_f1(std::slice::from_ref(m))),
        )
    } else {
        (
            Metric::Value(compute_uccr(&matches)),
            compute_pau(&matches),
            compute_pau_precision(&matches),
            compute_f1(&matches),
        )
    };

    Ok(MetricReport {
        uccr,
        pau,
        pau_precision,
        f1,
        action_accuracy,
        counts,
        descriptive: matches.len() < DESCRIPTIVE_SLICE_LIMIT,
        slices: None,
    })
}

fn macro_uccr(matches: &[SampleMatch]) -> f64 {
    let values: Vec<f64> = matches
        .iter()
        .filter(|m| !m.expressed_critical.is_empty())
        .map(|m| compute_uccr(std::slice::from_ref(m)))
        .collect();
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// One metric report per slice value of `key`, each over that slice only.
pub fn slice_report(
    preds: &[Prediction],
    gold: &Corpus,
    key: SliceKey,
    options: &MetricOptions,
) -> Result<BTreeMap<String, MetricReport>> {
    if preds.len() != gold.len() {
        return Err(Error::Mismatch(format!(
            "{} predictions vs {} gold records",
            preds.len(),
            gold.len()
        )));
    }
    let mut grouped: BTreeMap<String, (Vec<Prediction>, Vec<QARecord>)> = BTreeMap::new();
    for (p, g) in preds.iter().zip(gold.iter()) {
        let entry = grouped.entry(key.value_of(g)).or_default();
        entry.0.push(p.clone());
        entry.1.push(g.clone());
    }
    let mut out = BTreeMap::new();
    for (value, (slice_preds, slice_records)) in grouped {
        let slice_gold = Corpus::new(slice_records)?;
        out.insert(value, compute_report(&slice_preds, &slice_gold, options)?);
    }
    Ok(out)
}

/// Fixed-width text table over named reports, mirroring the standard
/// column order (UCCR, PAU, PAU Prec, F1, Action Acc).
pub fn render_table(rows: &[(String, MetricReport)]) -> String {
    let name_width = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(std::iter::once("configuration".len()))
        .max()
        .unwrap_or(13);
    let mut out = String::new();
    out.push_str(&format!(
        "{:<name_width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>10}  {:>6}\n",
        "configuration", "UCCR", "PAU", "PAU Prec", "F1", "Action Acc", "n"
    ));
    for (name, report) in rows {
        out.push_str(&format!(
            "{:<name_width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>10}  {:>6}\n",
            name,
            report.uccr.to_string(),
            report.pau.to_string(),
            report.pau_precision.to_string(),
            report.f1.to_string(),
            report.action_accuracy.to_string(),
            report.counts.n_records,
        ));
    }
    out
}
