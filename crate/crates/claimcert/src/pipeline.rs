//! End-to-end pipeline: decomposition, relation scoring, and policy
//! selection over whole corpora.
//!
//! Scoring is independent of selection thresholds, so the pipeline first
//! materializes a scored view of the corpus (skeletons plus pooled relation
//! scores per claim) and then applies any number of selection policies to
//! it. Tuners and sweeps reuse the scored view to avoid rescoring.
//!
//! Policy semantics:
//!
//! * `retrieval_only` expresses every skeleton with no scoring.
//! * `relation_only` expresses every claim with pooled support > 0; on an
//!   empty evidence pool it still expresses every skeleton (these two rows
//!   never abstain by construction).
//! * `threshold_only` applies the global gates; no source priors.
//! * `intent_aware` routes claims through intent branch families, applies
//!   the dosage rescue at scoring time and the review downgrade at action
//!   time.
//! * `binary_proxy` answers iff any claim's pooled support clears the
//!   answer gate, expressing exactly the clearing claims; actions are the
//!   lifted binary actions (answer -> full).
//! * `majority:<keys>` is the metadata-only action control (no decisions).
//! * `perturbed:<mode>` runs the intent-aware selector on a perturbed copy
//!   of each record.

use std::collections::BTreeSet;

use crate::corpus::{Corpus, QARecord};
use crate::decompose::{decompose, ClaimSkeleton, IntentRuleSet, TemplateSet};
use crate::error::{Error, Result};
use crate::label::{BinaryAction, ClaimTypeLabel, StatusLabel};
use crate::relation::{
    apply_dosage_rescue, pool, score_pair, CueLexicon, PooledScores, ScoreParams,
};
use crate::selector::{
    apply_majority, apply_review_downgrade, fit_majority_control, lift_binary, map_action,
    perturb, select_intent_aware_tagged, select_threshold_only_tagged, ClaimDecision,
    MajorityKey, PerturbMode, PolicyConfig, PolicyFamily, Prediction, ThresholdConfig,
};
use crate::text::parse_stopwords;

/// Everything needed to run the pipeline: rule tables, templates, lexicon,
/// scoring parameters, and selector configurations.
#[derive(Debug, Clone)]
pub struct PipelineAssets {
    pub rules: IntentRuleSet,
    pub templates: TemplateSet,
    pub lexicon: CueLexicon,
    pub params: ScoreParams,
    pub thresholds: ThresholdConfig,
    pub policy: PolicyConfig,
    /// Global support gate of the binary answer/abstain proxy.
    pub answer_gate: f64,
}

impl PipelineAssets {
    /// The shipped defaults, embedded in the binary.
    pub fn embedded() -> Self {
        use crate::decompose::{DEFAULT_INTENT_RULES, DEFAULT_STOPWORDS, DEFAULT_TEMPLATES};
        use crate::relation::DEFAULT_CUE_LEXICON;
        use crate::selector::{DEFAULT_POLICY, DEFAULT_THRESHOLDS};
        PipelineAssets {
            rules: IntentRuleSet::parse(DEFAULT_INTENT_RULES).expect("shipped intent rules"),
            templates: TemplateSet::parse(DEFAULT_TEMPLATES).expect("shipped templates"),
            lexicon: CueLexicon::parse(DEFAULT_CUE_LEXICON).expect("shipped lexicon"),
            params: ScoreParams::new(parse_stopwords(DEFAULT_STOPWORDS)),
            thresholds: ThresholdConfig::parse(DEFAULT_THRESHOLDS).expect("shipped thresholds"),
            policy: PolicyConfig::parse(DEFAULT_POLICY).expect("shipped policy"),
            answer_gate: 0.34,
        }
    }
}

/// One claim with its pooled (and rescue-adjusted) relation scores.
#[derive(Debug, Clone)]
pub struct ScoredClaim {
    pub skeleton: ClaimSkeleton,
    pub scores: PooledScores,
}

/// A record with its scored skeleton set.
#[derive(Debug, Clone)]
pub struct ScoredRecord<'a> {
    pub record: &'a QARecord,
    pub claims: Vec<ScoredClaim>,
}

/// Decompose and score one record. The skeleton set comes from the record's
/// stored intent; the dosage rescue is applied to eligible claims.
pub fn score_record<'a>(record: &'a QARecord, assets: &PipelineAssets) -> Result<ScoredRecord<'a>> {
    let skeletons = decompose(&record.question, &record.question_intent, &assets.templates)?;
    let claims = skeletons
        .into_iter()
        .map(|skeleton| {
            let pairs: Vec<(String, crate::relation::RelationVector)> = record
                .evidence_pool
                .iter()
                .map(|e| {
                    (
                        e.evidence_id.clone(),
                        score_pair(&skeleton, e, &assets.lexicon, &assets.params),
                    )
                })
                .collect();
            let pooled = pool(&pairs);
            let scores = apply_dosage_rescue(
                &skeleton,
                &pooled,
                &record.evidence_pool,
                &assets.lexicon,
                &assets.params,
            );
            ScoredClaim { skeleton, scores }
        })
        .collect();
    Ok(ScoredRecord { record, claims })
}

/// Score every record of a corpus.
pub fn score_corpus<'a>(corpus: &'a Corpus, assets: &PipelineAssets) -> Result<Vec<ScoredRecord<'a>>> {
    corpus.iter().map(|r| score_record(r, assets)).collect()
}

/// One-at-a-time perturbation of a relation coordinate entering a single
/// intent branch family (branch-input sensitivity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPerturbation {
    pub family: PolicyFamily,
    pub coordinate: Coordinate,
    pub delta: f64,
}

/// Relation vector coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Support,
    Conflict,
    Limitation,
}

impl Coordinate {
    pub const ALL: [Coordinate; 3] = [
        Coordinate::Support,
        Coordinate::Conflict,
        Coordinate::Limitation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Coordinate::Support => "support",
            Coordinate::Conflict => "conflict",
            Coordinate::Limitation => "limitation",
        }
    }
}

fn perturbed_scores(
    claim: &ScoredClaim,
    policy: &PolicyConfig,
    perturbation: Option<&BranchPerturbation>,
) -> PooledScores {
    let mut scores = claim.scores.clone();
    if let Some(p) = perturbation {
        if policy.family_of(&claim.skeleton.intent) == Some(p.family) {
            let slot = match p.coordinate {
                Coordinate::Support => &mut scores.support,
                Coordinate::Conflict => &mut scores.conflict,
                Coordinate::Limitation => &mut scores.limitation,
            };
            *slot = (*slot + p.delta).clamp(0.0, 1.0);
        }
    }
    scores
}

fn evidence_ids_for(status: StatusLabel, scores: &PooledScores) -> Vec<String> {
    let mut ids: Vec<String> = Vec::new();
    let mut push = |id: &Option<String>| {
        if let Some(id) = id {
            if !ids.contains(id) {
                ids.push(id.clone());
            }
        }
    };
    match status {
        StatusLabel::Certified => push(&scores.support_evidence),
        StatusLabel::ConditionLimited => {
            push(&scores.support_evidence);
            push(&scores.limitation_evidence);
        }
        StatusLabel::Conflicting => push(&scores.conflict_evidence),
        StatusLabel::Omitted => {}
    }
    ids
}

fn decision_from(
    claim: &ScoredClaim,
    scores: &PooledScores,
    status: StatusLabel,
    rationale_tag: String,
) -> ClaimDecision {
    ClaimDecision {
        claim_id: claim.skeleton.claim_id.clone(),
        status,
        support: scores.support,
        conflict: scores.conflict,
        limitation: scores.limitation,
        evidence_ids: evidence_ids_for(status, scores),
        rationale_tag,
        critical: claim.skeleton.critical,
    }
}

/// Threshold-only selection over a scored record.
pub fn predict_threshold_only(scored: &ScoredRecord<'_>, t: &ThresholdConfig) -> Result<Prediction> {
    let decisions: Vec<ClaimDecision> = scored
        .claims
        .iter()
        .map(|c| {
            let (status, tag) = select_threshold_only_tagged(&c.scores, t);
            decision_from(c, &c.scores, status, tag.to_string())
        })
        .collect();
    let action = map_action(&decisions)?;
    Ok(Prediction {
        id: scored.record.id.clone(),
        action,
        policy_name: "threshold_only".into(),
        decisions,
    })
}

/// Intent-aware selection over a scored record, including the review
/// downgrade prior and optional branch-input perturbation.
pub fn predict_intent_aware(
    scored: &ScoredRecord<'_>,
    policy: &PolicyConfig,
    perturbation: Option<&BranchPerturbation>,
) -> Result<Prediction> {
    let decisions: Vec<ClaimDecision> = scored
        .claims
        .iter()
        .map(|c| {
            let scores = perturbed_scores(c, policy, perturbation);
            let (status, tag) = select_intent_aware_tagged(
                &scores,
                &c.skeleton,
                scored.record.source_type,
                policy,
            );
            decision_from(c, &scores, status, tag)
        })
        .collect();
    let action = map_action(&decisions)?;
    let claim_types: Vec<ClaimTypeLabel> =
        scored.claims.iter().map(|c| c.skeleton.claim_type).collect();
    let action = apply_review_downgrade(action, scored.record.source_type, &claim_types, policy);
    Ok(Prediction {
        id: scored.record.id.clone(),
        action,
        policy_name: "intent_aware".into(),
        decisions,
    })
}

/// Express every skeleton without scoring.
pub fn predict_retrieval_only(scored: &ScoredRecord<'_>) -> Result<Prediction> {
    let all_ids: Vec<String> = scored
        .record
        .evidence_pool
        .iter()
        .map(|e| e.evidence_id.clone())
        .collect();
    let decisions: Vec<ClaimDecision> = scored
        .claims
        .iter()
        .map(|c| ClaimDecision {
            claim_id: c.skeleton.claim_id.clone(),
            status: StatusLabel::Certified,
            support: 0.0,
            conflict: 0.0,
            limitation: 0.0,
            evidence_ids: all_ids.clone(),
            rationale_tag: "retrieval_only.expressed".into(),
            critical: c.skeleton.critical,
        })
        .collect();
    let action = map_action(&decisions)?;
    Ok(Prediction {
        id: scored.record.id.clone(),
        action,
        policy_name: "retrieval_only".into(),
        decisions,
    })
}

/// Express claims with pooled support > 0; with an empty evidence pool the
/// row expresses every skeleton (it never abstains deliberately).
pub fn predict_relation_only(scored: &ScoredRecord<'_>) -> Result<Prediction> {
    let empty_pool = scored.record.evidence_pool.is_empty();
    let decisions: Vec<ClaimDecision> = scored
        .claims
        .iter()
        .map(|c| {
            let (status, tag) = if empty_pool {
                (StatusLabel::Certified, "relation_only.no_evidence")
            } else if c.scores.support > 0.0 {
                (StatusLabel::Certified, "relation_only.expressed")
            } else {
                (StatusLabel::Omitted, "relation_only.unsupported")
            };
            decision_from(c, &c.scores, status, tag.to_string())
        })
        .collect();
    let action = map_action(&decisions)?;
    Ok(Prediction {
        id: scored.record.id.clone(),
        action,
        policy_name: "relation_only".into(),
        decisions,
    })
}

/// Binary answer/abstain proxy at a given answer gate.
pub fn predict_binary_proxy(scored: &ScoredRecord<'_>, gate: f64) -> Prediction {
    let answered = scored.claims.iter().any(|c| c.scores.support >= gate);
    let decisions: Vec<ClaimDecision> = scored
        .claims
        .iter()
        .map(|c| {
            let (status, tag) = if answered && c.scores.support >= gate {
                (StatusLabel::Certified, "binary.expressed")
            } else {
                (StatusLabel::Omitted, "binary.suppressed")
            };
            decision_from(c, &c.scores, status, tag.to_string())
        })
        .collect();
    let binary = if answered {
        BinaryAction::Answer
    } else {
        BinaryAction::Abstain
    };
    Prediction {
        id: scored.record.id.clone(),
        action: lift_binary(binary),
        policy_name: "binary_proxy".into(),
        decisions,
    }
}

/// A runnable policy selection.
#[derive(Debug, Clone, PartialEq)]
pub enum RunPolicy {
    RetrievalOnly,
    RelationOnly,
    ThresholdOnly,
    IntentAware,
    BinaryProxy,
    Majority(Vec<MajorityKey>),
    Perturbed(PerturbMode),
}

impl RunPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "retrieval_only" => Ok(RunPolicy::RetrievalOnly),
            "relation_only" => Ok(RunPolicy::RelationOnly),
            "threshold_only" => Ok(RunPolicy::ThresholdOnly),
            "intent_aware" => Ok(RunPolicy::IntentAware),
            "binary_proxy" => Ok(RunPolicy::BinaryProxy),
            other => {
                if let Some(keys) = other.strip_prefix("majority:") {
                    let keys: Result<Vec<MajorityKey>> =
                        keys.split(',').map(|k| MajorityKey::parse(k.trim())).collect();
                    let keys = keys?;
                    let unique: BTreeSet<_> = keys.iter().copied().collect();
                    if keys.is_empty() || unique.len() != keys.len() {
                        return Err(Error::Config(format!(
                            "majority keys must be a non-empty set, got '{other}'"
                        )));
                    }
                    Ok(RunPolicy::Majority(keys))
                } else if let Some(mode) = other.strip_prefix("perturbed:") {
                    Ok(RunPolicy::Perturbed(PerturbMode::parse(mode)?))
                } else {
                    Err(Error::Config(format!("unknown policy '{other}'")))
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            RunPolicy::RetrievalOnly => "retrieval_only".into(),
            RunPolicy::RelationOnly => "relation_only".into(),
            RunPolicy::ThresholdOnly => "threshold_only".into(),
            RunPolicy::IntentAware => "intent_aware".into(),
            RunPolicy::BinaryProxy => "binary_proxy".into(),
            RunPolicy::Majority(keys) => format!(
                "majority:{}",
                keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",")
            ),
            RunPolicy::Perturbed(mode) => format!("perturbed:{}", mode.as_str()),
        }
    }

    /// Whether this policy produces evidence-linked claim decisions.
    pub fn produces_certificates(&self) -> bool {
        !matches!(self, RunPolicy::Majority(_))
    }
}

/// Run one policy over a corpus. `train` is required for majority controls;
/// `seed` drives the perturbation permutations.
pub fn run_policy(
    corpus: &Corpus,
    train: Option<&Corpus>,
    policy: &RunPolicy,
    assets: &PipelineAssets,
    seed: u64,
) -> Result<Vec<Prediction>> {
    match policy {
        RunPolicy::Majority(keys) => {
            let train = train.ok_or_else(|| {
                Error::Validation("majority controls require a training corpus (--train)".into())
            })?;
            let fitted = fit_majority_control(train, keys)?;
            Ok(corpus
                .iter()
                .map(|r| Prediction {
                    id: r.id.clone(),
                    action: apply_majority(&fitted, r),
                    policy_name: policy.name(),
                    decisions: vec![],
                })
                .collect())
        }
        RunPolicy::Perturbed(mode) => {
            let perturbed: Vec<QARecord> = corpus
                .iter()
                .map(|r| perturb(r, *mode, corpus, seed))
                .collect::<Result<_>>()?;
            let perturbed = Corpus::new(perturbed)?;
            let mut predictions = Vec::with_capacity(perturbed.len());
            for record in &perturbed {
                let scored = score_record(record, assets)?;
                let mut p = predict_intent_aware(&scored, &assets.policy, None)?;
                p.policy_name = policy.name();
                predictions.push(p);
            }
            Ok(predictions)
        }
        simple => {
            let mut predictions = Vec::with_capacity(corpus.len());
            for record in corpus {
                let scored = score_record(record, assets)?;
                let prediction = match simple {
                    RunPolicy::RetrievalOnly => predict_retrieval_only(&scored)?,
                    RunPolicy::RelationOnly => predict_relation_only(&scored)?,
                    RunPolicy::ThresholdOnly => predict_threshold_only(&scored, &assets.thresholds)?,
                    RunPolicy::IntentAware => predict_intent_aware(&scored, &assets.policy, None)?,
                    RunPolicy::BinaryProxy => predict_binary_proxy(&scored, assets.answer_gate),
                    _ => unreachable!("majority and perturbed handled above"),
                };
                predictions.push(prediction);
            }
            Ok(predictions)
        }
    }
}

/// Serialize predictions to the documented JSONL format.
pub fn predictions_to_jsonl(preds: &[Prediction]) -> String {
    let mut out = String::new();
    for p in preds {
        out.push_str(&serde_json::to_string(p).expect("prediction serialization"));
        out.push('\n');
    }
    out
}
