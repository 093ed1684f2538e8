//! Threshold-grid tuning, answer-gate tuning, risk-coverage sweeps, and
//! sensitivity sweeps.
//!
//! All four reuse the pipeline's scored view so the relation scorer runs
//! once per corpus. Tuners filter to candidates with zero unsupported
//! critical claim rate and then maximize utility, action accuracy, and F1
//! lexicographically; remaining ties resolve to the smallest gates.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::label::StatusLabel;
use crate::metrics::{compute_report, Metric, MetricOptions, MetricReport};
use crate::pipeline::{
    predict_binary_proxy, predict_intent_aware, predict_threshold_only, score_corpus,
    BranchPerturbation, Coordinate, PipelineAssets, ScoredRecord,
};
use crate::selector::{select_threshold_only, PolicyFamily, Prediction, ThresholdConfig};
use crate::stats::{record_stats, MetricKind};

/// Grids for the exhaustive threshold product search. The limitation gate
/// is not searched; it stays at the base configuration's value.
#[derive(Debug, Clone)]
pub struct ThresholdGrids {
    pub support: Vec<f64>,
    pub conflict: Vec<f64>,
    pub condition_limited: Vec<f64>,
}

fn grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut v = start;
    while v <= end + 1e-9 {
        out.push((v * 100.0).round() / 100.0);
        v += step;
    }
    out
}

impl Default for ThresholdGrids {
    fn default() -> Self {
        ThresholdGrids {
            support: grid(0.20, 0.60, 0.05),
            conflict: grid(0.45, 0.70, 0.05),
            condition_limited: grid(0.15, 0.45, 0.05),
        }
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct TuneCandidate {
    pub support: f64,
    pub conflict: f64,
    pub condition_limited: f64,
    pub uccr: f64,
    pub pau: Metric,
    pub action_accuracy: f64,
    pub f1: Metric,
    pub feasible: bool,
}

fn metric_or_neg(m: Metric) -> f64 {
    m.value().unwrap_or(-1.0)
}

fn rank_key(c: &TuneCandidate) -> (bool, f64, f64, f64, f64, f64, f64) {
    // Feasible first; then PAU, action accuracy, F1 descending; then the
    // smallest (support, conflict, condition_limited).
    (
        !c.feasible,
        -metric_or_neg(c.pau),
        -c.action_accuracy,
        -metric_or_neg(c.f1),
        c.support,
        c.conflict,
        c.condition_limited,
    )
}

fn evaluate_threshold_cell(
    scored: &[ScoredRecord<'_>],
    gold: &Corpus,
    config: &ThresholdConfig,
    options: &MetricOptions,
) -> Result<(f64, Metric, f64, Metric)> {
    let preds: Vec<Prediction> = scored
        .iter()
        .map(|s| predict_threshold_only(s, config))
        .collect::<Result<_>>()?;
    let stats = record_stats(&preds, gold, options)?;
    let all: Vec<usize> = (0..stats.len()).collect();
    let uccr = MetricKind::Uccr.eval(&stats, &all).expect("uccr is total");
    let pau = MetricKind::Pau
        .eval(&stats, &all)
        .map(Metric::Value)
        .unwrap_or(Metric::NotApplicable);
    let acc = MetricKind::ActionAccuracy.eval(&stats, &all).expect("n > 0");
    let f1 = MetricKind::F1
        .eval(&stats, &all)
        .map(Metric::Value)
        .unwrap_or(Metric::NotApplicable);
    Ok((uccr, pau, acc, f1))
}

/// Exhaustive product search over the grids on a dev corpus. Among cells
/// with UCCR exactly zero, maximizes PAU, then action accuracy, then F1;
/// final ties take the lexicographically smallest gates. Cells violating
/// `condition_limited <= support` are skipped. Errors when no cell reaches
/// UCCR zero, naming the closest candidates.
pub fn grid_tune_thresholds(
    dev: &Corpus,
    assets: &PipelineAssets,
    grids: &ThresholdGrids,
    options: &MetricOptions,
) -> Result<(ThresholdConfig, Vec<TuneCandidate>)> {
    if grids.support.is_empty() || grids.conflict.is_empty() || grids.condition_limited.is_empty() {
        return Err(Error::Validation("threshold grids must be non-empty".into()));
    }
    if dev.is_empty() {
        return Err(Error::Validation("tuning requires a non-empty dev corpus".into()));
    }
    let scored = score_corpus(dev, assets)?;
    let mut candidates = Vec::new();
    for &support in &grids.support {
        for &conflict in &grids.conflict {
            for &condition_limited in &grids.condition_limited {
                if condition_limited > support {
                    continue;
                }
                let config = ThresholdConfig {
                    support,
                    conflict,
                    condition_limited,
                    limitation: assets.thresholds.limitation,
                };
                let (uccr, pau, action_accuracy, f1) =
                    evaluate_threshold_cell(&scored, dev, &config, options)?;
                candidates.push(TuneCandidate {
                    support,
                    conflict,
                    condition_limited,
                    uccr,
                    pau,
                    action_accuracy,
                    f1,
                    feasible: uccr == 0.0,
                });
            }
        }
    }
    candidates.sort_by(|a, b| rank_key(a).partial_cmp(&rank_key(b)).expect("finite keys"));
    let best = candidates.first().ok_or_else(|| {
        Error::Validation("threshold grid produced no valid cells".into())
    })?;
    if !best.feasible {
        let mut closest: Vec<&TuneCandidate> = candidates.iter().collect();
        closest.sort_by(|a, b| a.uccr.partial_cmp(&b.uccr).expect("finite uccr"));
        let listing: Vec<String> = closest
            .iter()
            .take(5)
            .map(|c| {
                format!(
                    "support={:.2} conflict={:.2} condition_limited={:.2} uccr={:.4}",
                    c.support, c.conflict, c.condition_limited, c.uccr
                )
            })
            .collect();
        return Err(Error::Infeasible(format!(
            "no grid cell reaches UCCR = 0; closest: {}",
            listing.join("; ")
        )));
    }
    let chosen = ThresholdConfig {
        support: best.support,
        conflict: best.conflict,
        condition_limited: best.condition_limited,
        limitation: assets.thresholds.limitation,
    };
    Ok((chosen, candidates))
}

/// One evaluated answer gate.
#[derive(Debug, Clone, Serialize)]
pub struct GateCandidate {
    pub gate: f64,
    pub uccr: f64,
    pub pau: Metric,
    pub action_accuracy: f64,
    pub f1: Metric,
    pub feasible: bool,
}

/// Tune the binary proxy's global answer gate on a dev corpus: among gates
/// with UCCR zero, maximize PAU, then action accuracy, then F1; ties take
/// the smallest gate. Errors when no gate reaches UCCR zero.
pub fn tune_answer_gate(
    dev: &Corpus,
    assets: &PipelineAssets,
    gates: &[f64],
    options: &MetricOptions,
) -> Result<(f64, Vec<GateCandidate>)> {
    if gates.is_empty() {
        return Err(Error::Validation("answer-gate grid must be non-empty".into()));
    }
    if dev.is_empty() {
        return Err(Error::Validation("tuning requires a non-empty dev corpus".into()));
    }
    let scored = score_corpus(dev, assets)?;
    let mut candidates = Vec::new();
    for &gate in gates {
        let preds: Vec<Prediction> = scored.iter().map(|s| predict_binary_proxy(s, gate)).collect();
        let stats = record_stats(&preds, dev, options)?;
        let all: Vec<usize> = (0..stats.len()).collect();
        let uccr = MetricKind::Uccr.eval(&stats, &all).expect("uccr is total");
        let pau = MetricKind::Pau
            .eval(&stats, &all)
            .map(Metric::Value)
            .unwrap_or(Metric::NotApplicable);
        let action_accuracy = MetricKind::ActionAccuracy.eval(&stats, &all).expect("n > 0");
        let f1 = MetricKind::F1
            .eval(&stats, &all)
            .map(Metric::Value)
            .unwrap_or(Metric::NotApplicable);
        candidates.push(GateCandidate {
            gate,
            uccr,
            pau,
            action_accuracy,
            f1,
            feasible: uccr == 0.0,
        });
    }
    candidates.sort_by(|a, b| {
        let key = |c: &GateCandidate| {
            (
                !c.feasible,
                -metric_or_neg(c.pau),
                -c.action_accuracy,
                -metric_or_neg(c.f1),
                c.gate,
            )
        };
        key(a).partial_cmp(&key(b)).expect("finite keys")
    });
    let best = &candidates[0];
    if !best.feasible {
        let min_uccr = candidates
            .iter()
            .map(|c| c.uccr)
            .fold(f64::INFINITY, f64::min);
        return Err(Error::Infeasible(format!(
            "no answer gate reaches UCCR = 0 (best UCCR {min_uccr:.4} over {} gates)",
            candidates.len()
        )));
    }
    Ok((best.gate, candidates))
}

/// Default answer-gate grid: 0.20 to 0.60 in steps of 0.02.
pub fn default_gate_grid() -> Vec<f64> {
    grid(0.20, 0.60, 0.02)
}

/// One point of the critical-claim risk-coverage view.
#[derive(Debug, Clone, Serialize)]
pub struct RiskCoveragePoint {
    pub threshold: f64,
    pub coverage: f64,
    pub risk: f64,
    /// Set when no critical claim was selected (risk reported as zero).
    pub empty_selection: bool,
}

/// Sweep the threshold-only support gate, tying the condition-limited gate
/// to `support - 0.10` (clamped at zero) with conflict and limitation gates
/// fixed at the base configuration. Each gold critical claim is a
/// selectable item: coverage is the selected fraction, risk the selected
/// fraction not gold-usable.
pub fn risk_coverage_sweep(
    corpus: &Corpus,
    assets: &PipelineAssets,
    base: &ThresholdConfig,
    support_grid: &[f64],
) -> Result<Vec<RiskCoveragePoint>> {
    if support_grid.is_empty() {
        return Err(Error::Validation("risk-coverage grid must be non-empty".into()));
    }
    let scored = score_corpus(corpus, assets)?;
    let mut points = Vec::with_capacity(support_grid.len());
    for &support in support_grid {
        let config = ThresholdConfig {
            support,
            conflict: base.conflict,
            condition_limited: (support - 0.10).max(0.0),
            limitation: base.limitation,
        };
        let mut items = 0usize;
        let mut selected = 0usize;
        let mut unsupported = 0usize;
        for record in &scored {
            let statuses: BTreeMap<&str, StatusLabel> = record
                .claims
                .iter()
                .map(|c| {
                    (
                        c.skeleton.claim_id.as_str(),
                        select_threshold_only(&c.scores, &config),
                    )
                })
                .collect();
            for claim in &record.record.gold_claims {
                if !claim.critical {
                    continue;
                }
                items += 1;
                let expressed = statuses
                    .get(claim.claim_id.as_str())
                    .map(|s| s.is_expressed())
                    .unwrap_or(false);
                if expressed {
                    selected += 1;
                    if !claim.is_usable() {
                        unsupported += 1;
                    }
                }
            }
        }
        let coverage = if items == 0 {
            0.0
        } else {
            selected as f64 / items as f64
        };
        let (risk, empty_selection) = if selected == 0 {
            (0.0, true)
        } else {
            (unsupported as f64 / selected as f64, false)
        };
        points.push(RiskCoveragePoint {
            threshold: support,
            coverage,
            risk,
            empty_selection,
        });
    }
    Ok(points)
}

/// Sensitivity sweep targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTarget {
    /// One-at-a-time +/-0.05 perturbations of the threshold fields
    /// (the fallback thresholds when the selector is intent-aware).
    Thresholds,
    /// +/-0.05 and +/-0.10 added to one relation coordinate entering one
    /// intent branch family at a time (intent-aware selector only).
    BranchInputs,
}

impl SweepTarget {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "thresholds" => Ok(SweepTarget::Thresholds),
            "branch_inputs" => Ok(SweepTarget::BranchInputs),
            other => Err(Error::Validation(format!("unknown sweep target '{other}'"))),
        }
    }
}

/// Selector under sensitivity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepSelector {
    ThresholdOnly,
    IntentAware,
}

/// One sweep cell: the perturbation label, the resulting metric suite, and
/// deltas against the base run (not-applicable when either side is).
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub label: String,
    pub report: MetricReport,
    pub delta_uccr: Metric,
    pub delta_pau: Metric,
    pub delta_f1: Metric,
    pub delta_action_accuracy: Metric,
}

/// A full sensitivity sweep: the base report plus one cell per perturbation.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub base: MetricReport,
    pub cells: Vec<SweepCell>,
}

fn metric_delta(perturbed: Metric, base: Metric) -> Metric {
    match (perturbed.value(), base.value()) {
        (Some(p), Some(b)) => Metric::Value(p - b),
        _ => Metric::NotApplicable,
    }
}

fn cell_from(label: String, report: MetricReport, base: &MetricReport) -> SweepCell {
    SweepCell {
        delta_uccr: metric_delta(report.uccr, base.uccr),
        delta_pau: metric_delta(report.pau, base.pau),
        delta_f1: metric_delta(report.f1, base.f1),
        delta_action_accuracy: metric_delta(report.action_accuracy, base.action_accuracy),
        label,
        report,
    }
}

fn run_threshold_variant(
    scored: &[ScoredRecord<'_>],
    gold: &Corpus,
    selector: SweepSelector,
    assets: &PipelineAssets,
    thresholds: &ThresholdConfig,
    perturbation: Option<&BranchPerturbation>,
    options: &MetricOptions,
) -> Result<MetricReport> {
    let preds: Vec<Prediction> = match selector {
        SweepSelector::ThresholdOnly => scored
            .iter()
            .map(|s| predict_threshold_only(s, thresholds))
            .collect::<Result<_>>()?,
        SweepSelector::IntentAware => {
            let mut policy = assets.policy.clone();
            policy.fallback = *thresholds;
            scored
                .iter()
                .map(|s| predict_intent_aware(s, &policy, perturbation))
                .collect::<Result<_>>()?
        }
    };
    compute_report(&preds, gold, options)
}

/// Run a sensitivity sweep over a corpus.
pub fn sensitivity_sweep(
    corpus: &Corpus,
    assets: &PipelineAssets,
    selector: SweepSelector,
    target: SweepTarget,
    options: &MetricOptions,
) -> Result<SweepReport> {
    if corpus.is_empty() {
        return Err(Error::Validation("sensitivity sweep requires records".into()));
    }
    let scored = score_corpus(corpus, assets)?;
    let base_thresholds = match selector {
        SweepSelector::ThresholdOnly => assets.thresholds,
        SweepSelector::IntentAware => assets.policy.fallback,
    };
    let base = run_threshold_variant(
        &scored,
        corpus,
        selector,
        assets,
        &base_thresholds,
        None,
        options,
    )?;
    let mut cells = Vec::new();
    match target {
        SweepTarget::Thresholds => {
            for field in ["support", "conflict", "condition_limited", "limitation"] {
                for delta in [0.05, -0.05] {
                    let mut t = base_thresholds;
                    let slot = match field {
                        "support" => &mut t.support,
                        "conflict" => &mut t.conflict,
                        "condition_limited" => &mut t.condition_limited,
                        _ => &mut t.limitation,
                    };
                    *slot = (*slot + delta).clamp(0.0, 1.0);
                    let report = run_threshold_variant(
                        &scored, corpus, selector, assets, &t, None, options,
                    )?;
                    cells.push(cell_from(
                        format!("{field}{delta:+.2}"),
                        report,
                        &base,
                    ));
                }
            }
        }
        SweepTarget::BranchInputs => {
            if selector != SweepSelector::IntentAware {
                return Err(Error::Validation(
                    "branch-input sweeps apply to the intent-aware selector".into(),
                ));
            }
            for family in PolicyFamily::ALL {
                for coordinate in Coordinate::ALL {
                    for delta in [0.05, -0.05, 0.10, -0.10] {
                        let perturbation = BranchPerturbation {
                            family,
                            coordinate,
                            delta,
                        };
                        let report = run_threshold_variant(
                            &scored,
                            corpus,
                            selector,
                            assets,
                            &base_thresholds,
                            Some(&perturbation),
                            options,
                        )?;
                        cells.push(cell_from(
                            format!("{}.{}{delta:+.2}", family.as_str(), coordinate.as_str()),
                            report,
                            &base,
                        ));
                    }
                }
            }
        }
    }
    Ok(SweepReport { base, cells })
}

/// Plot-ready TSV for a risk-coverage sweep.
pub fn risk_coverage_tsv(points: &[RiskCoveragePoint]) -> String {
    let mut out = String::from("threshold\tcoverage\trisk\tempty_selection\n");
    for p in points {
        out.push_str(&format!(
            "{:.4}\t{:.6}\t{:.6}\t{}\n",
            p.threshold, p.coverage, p.risk, p.empty_selection
        ));
    }
    out
}

/// TSV table for tuned threshold candidates.
pub fn candidates_tsv(candidates: &[TuneCandidate]) -> String {
    let mut out =
        String::from("support\tconflict\tcondition_limited\tuccr\tpau\taction_accuracy\tf1\tfeasible\n");
    for c in candidates {
        out.push_str(&format!(
            "{:.2}\t{:.2}\t{:.2}\t{:.6}\t{}\t{:.6}\t{}\t{}\n",
            c.support, c.conflict, c.condition_limited, c.uccr, c.pau, c.action_accuracy, c.f1,
            c.feasible
        ));
    }
    out
}

/// TSV table for answer-gate candidates.
pub fn gates_tsv(candidates: &[GateCandidate]) -> String {
    let mut out = String::from("gate\tuccr\tpau\taction_accuracy\tf1\tfeasible\n");
    for c in candidates {
        out.push_str(&format!(
            "{:.2}\t{:.6}\t{}\t{:.6}\t{}\t{}\n",
            c.gate, c.uccr, c.pau, c.action_accuracy, c.f1, c.feasible
        ));
    }
    out
}

/// TSV table for a sensitivity sweep.
pub fn sweep_tsv(report: &SweepReport) -> String {
    let mut out = String::from(
        "label\tuccr\tpau\tpau_precision\tf1\taction_accuracy\tdelta_uccr\tdelta_pau\tdelta_f1\tdelta_action_accuracy\n",
    );
    let row = |label: &str, r: &MetricReport, du: &Metric, dp: &Metric, df: &Metric, da: &Metric| {
        format!(
            "{label}\t{}\t{}\t{}\t{}\t{}\t{du}\t{dp}\t{df}\t{da}\n",
            r.uccr, r.pau, r.pau_precision, r.f1, r.action_accuracy
        )
    };
    out.push_str(&row(
        "base",
        &report.base,
        &Metric::Value(0.0),
        &Metric::Value(0.0),
        &Metric::Value(0.0),
        &Metric::Value(0.0),
    ));
    for cell in &report.cells {
        out.push_str(&row(
            &cell.label,
            &cell.report,
            &cell.delta_uccr,
            &cell.delta_pau,
            &cell.delta_f1,
            &cell.delta_action_accuracy,
        ));
    }
    out
}
