//! Status selection and action mapping.
//!
//! Two selectors share one status vocabulary: a threshold-only baseline
//! driven by four global gates, and an intent-aware policy that routes each
//! claim through one of five branch families (full-certify oriented,
//! partial-oriented, conflict-oriented, mixed, dosage) before a global
//! fallback. Claim statuses then collapse to a response action through a
//! fixed decision flow: abstain when nothing is expressible, conflict when
//! any claim conflicts, full when every critical claim is certified,
//! otherwise partial.
//!
//! Branch rules, in evaluation order (conflict is always checked first):
//!
//! * `full_oriented` / `conflict_oriented`: certify at the family support
//!   gate when limitation is quiet; moderate support (within 0.05 below the
//!   gate) or active limitation with half-gate support yields
//!   condition-limited. `conflict_oriented` ships a lower conflict gate.
//! * `partial_oriented`: active limitation with at least half-gate support
//!   yields condition-limited even when support clears the certify gate.
//! * `dosage`: expression requires support at or above the family gate
//!   (the openFDA instruction rescue may have raised it); anything below
//!   is omitted.
//! * `mixed`: family-gate certification/conflict first, then the global
//!   fallback thresholds.
//!
//! Intents outside the enumerated set (the `other:` escape, including
//! intent-dropped perturbations) route directly to the global fallback,
//! which is exactly the threshold-only rule.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, QARecord};
use crate::decompose::ClaimSkeleton;
use crate::error::{Error, Result};
use crate::label::{ActionLabel, BinaryAction, ClaimTypeLabel, IntentLabel, SourceLabel, StatusLabel};
use crate::relation::PooledScores;

/// Global status gates used by the threshold-only selector and as the
/// intent-aware policy's fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub support: f64,
    pub conflict: f64,
    pub condition_limited: f64,
    pub limitation: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            support: 0.35,
            conflict: 0.55,
            condition_limited: 0.30,
            limitation: 0.50,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("support", self.support),
            ("conflict", self.conflict),
            ("condition_limited", self.condition_limited),
            ("limitation", self.limitation),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("threshold {name}={v} outside [0,1]")));
            }
        }
        if self.condition_limited > self.support {
            return Err(Error::Config(format!(
                "condition_limited ({}) must not exceed support ({})",
                self.condition_limited, self.support
            )));
        }
        Ok(())
    }

    pub fn parse(contents: &str) -> Result<Self> {
        let config: ThresholdConfig =
            toml::from_str(contents).map_err(|e| Error::Config(format!("thresholds: {e}")))?;
        config.validate()?;
        Ok(config)
    }
}

/// Intent branch families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyFamily {
    FullOriented,
    PartialOriented,
    ConflictOriented,
    Mixed,
    Dosage,
}

impl PolicyFamily {
    pub const ALL: [PolicyFamily; 5] = [
        PolicyFamily::FullOriented,
        PolicyFamily::PartialOriented,
        PolicyFamily::ConflictOriented,
        PolicyFamily::Mixed,
        PolicyFamily::Dosage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyFamily::FullOriented => "full_oriented",
            PolicyFamily::PartialOriented => "partial_oriented",
            PolicyFamily::ConflictOriented => "conflict_oriented",
            PolicyFamily::Mixed => "mixed",
            PolicyFamily::Dosage => "dosage",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full_oriented" => Ok(PolicyFamily::FullOriented),
            "partial_oriented" => Ok(PolicyFamily::PartialOriented),
            "conflict_oriented" => Ok(PolicyFamily::ConflictOriented),
            "mixed" => Ok(PolicyFamily::Mixed),
            "dosage" => Ok(PolicyFamily::Dosage),
            other => Err(Error::Config(format!("unknown policy family '{other}'"))),
        }
    }
}

/// Per-family branch gates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyGates {
    pub support_gate: f64,
    pub conflict_gate: f64,
    pub limitation_gate: f64,
}

impl FamilyGates {
    fn validate(&self, family: PolicyFamily) -> Result<()> {
        for (name, v) in [
            ("support_gate", self.support_gate),
            ("conflict_gate", self.conflict_gate),
            ("limitation_gate", self.limitation_gate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!(
                    "family {}: {name}={v} outside [0,1]",
                    family.as_str()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct PolicyFile {
    fallback: ThresholdConfig,
    families: BTreeMap<String, FamilyGates>,
    intent_families: BTreeMap<String, String>,
    review_downgrade: ReviewDowngradeFile,
}

#[derive(Debug, Deserialize)]
struct ReviewDowngradeFile {
    claim_types: Vec<ClaimTypeLabel>,
}

/// The intent-aware selector's full configuration: branch gates per family,
/// the intent-to-family routing table, the global fallback thresholds, and
/// the claim-type set eligible for the literature review downgrade.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub fallback: ThresholdConfig,
    pub families: BTreeMap<PolicyFamily, FamilyGates>,
    pub intent_families: BTreeMap<IntentLabel, PolicyFamily>,
    pub review_downgrade: BTreeSet<ClaimTypeLabel>,
}

impl PolicyConfig {
    pub fn parse(contents: &str) -> Result<Self> {
        let file: PolicyFile =
            toml::from_str(contents).map_err(|e| Error::Config(format!("policy file: {e}")))?;
        let mut families = BTreeMap::new();
        for (name, gates) in file.families {
            let family = PolicyFamily::parse(&name)?;
            gates.validate(family)?;
            families.insert(family, gates);
        }
        let mut intent_families = BTreeMap::new();
        for (intent, family) in file.intent_families {
            intent_families.insert(IntentLabel::parse(&intent)?, PolicyFamily::parse(&family)?);
        }
        let config = PolicyConfig {
            fallback: file.fallback,
            families,
            intent_families,
            review_downgrade: file.review_downgrade.claim_types.into_iter().collect(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.fallback.validate()?;
        for intent in IntentLabel::ENUMERATED {
            let family = self.intent_families.get(&intent).ok_or_else(|| {
                Error::Config(format!(
                    "intent '{}' is not mapped to a policy family",
                    intent.as_string()
                ))
            })?;
            if !self.families.contains_key(family) {
                return Err(Error::Config(format!(
                    "family '{}' referenced by '{}' has no gates",
                    family.as_str(),
                    intent.as_string()
                )));
            }
        }
        Ok(())
    }

    /// Branch family for an intent. `other:` intents have no family and
    /// route to the global fallback.
    pub fn family_of(&self, intent: &IntentLabel) -> Option<PolicyFamily> {
        match intent {
            IntentLabel::Other(_) => None,
            enumerated => self.intent_families.get(enumerated).copied(),
        }
    }

    pub fn gates(&self, family: PolicyFamily) -> &FamilyGates {
        self.families.get(&family).expect("validated family gates")
    }
}

/// One claim's selected status with its certificate trail. `critical` is
/// carried from the skeleton for action mapping and metrics; it is not part
/// of the serialized certificate schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimDecision {
    pub claim_id: String,
    pub status: StatusLabel,
    pub support: f64,
    pub conflict: f64,
    pub limitation: f64,
    pub evidence_ids: Vec<String>,
    pub rationale_tag: String,
    #[serde(skip)]
    pub critical: bool,
}

/// One record's prediction: the action plus the per-claim certificate.
/// Action-only controls (majority policies) carry an empty decision list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub action: ActionLabel,
    pub policy_name: String,
    pub decisions: Vec<ClaimDecision>,
}

/// Threshold-only status rule. Gates are applied in fixed order: conflict,
/// certify, condition-limited, omit.
pub fn select_threshold_only(scores: &PooledScores, t: &ThresholdConfig) -> StatusLabel {
    select_threshold_only_tagged(scores, t).0
}

pub(crate) fn select_threshold_only_tagged(
    scores: &PooledScores,
    t: &ThresholdConfig,
) -> (StatusLabel, &'static str) {
    if scores.conflict >= t.conflict {
        (StatusLabel::Conflicting, "threshold.conflicting")
    } else if scores.support >= t.support && scores.limitation < t.limitation {
        (StatusLabel::Certified, "threshold.certified")
    } else if scores.support >= t.condition_limited
        || (scores.limitation >= t.limitation && scores.support >= t.condition_limited * 0.5)
    {
        (StatusLabel::ConditionLimited, "threshold.condition_limited")
    } else {
        (StatusLabel::Omitted, "threshold.omitted")
    }
}

/// Intent-aware status rule. Routes by the claim's intent family; see the
/// module docs for the per-family branch order. `source_type` is accepted
/// for interface parity with the scoped priors, which act at relation level
/// (dosage rescue) and action level (review downgrade) rather than here.
pub fn select_intent_aware(
    scores: &PooledScores,
    claim: &ClaimSkeleton,
    source_type: SourceLabel,
    policy: &PolicyConfig,
) -> StatusLabel {
    select_intent_aware_tagged(scores, claim, source_type, policy).0
}

pub(crate) fn select_intent_aware_tagged(
    scores: &PooledScores,
    claim: &ClaimSkeleton,
    _source_type: SourceLabel,
    policy: &PolicyConfig,
) -> (StatusLabel, String) {
    let family = match policy.family_of(&claim.intent) {
        Some(f) => f,
        None => {
            let (status, tag) = select_threshold_only_tagged(scores, &policy.fallback);
            return (status, format!("fallback.{}", tag.trim_start_matches("threshold.")));
        }
    };
    let g = policy.gates(family);
    let cond_gate = (g.support_gate - 0.05).max(0.0);
    let tagged = |status: StatusLabel, branch: &str| {
        (status, format!("{}.{branch}", family.as_str()))
    };
    if scores.conflict >= g.conflict_gate {
        return tagged(StatusLabel::Conflicting, "conflicting");
    }
    match family {
        PolicyFamily::FullOriented | PolicyFamily::ConflictOriented => {
            if scores.support >= g.support_gate && scores.limitation < g.limitation_gate {
                tagged(StatusLabel::Certified, "certified")
            } else if scores.support >= cond_gate
                || (scores.limitation >= g.limitation_gate && scores.support >= cond_gate * 0.5)
            {
                tagged(StatusLabel::ConditionLimited, "condition_limited")
            } else {
                tagged(StatusLabel::Omitted, "omitted")
            }
        }
        PolicyFamily::PartialOriented => {
            if scores.limitation >= g.limitation_gate && scores.support >= 0.5 * g.support_gate {
                tagged(StatusLabel::ConditionLimited, "limitation_preference")
            } else if scores.support >= g.support_gate && scores.limitation < g.limitation_gate {
                tagged(StatusLabel::Certified, "certified")
            } else if scores.support >= cond_gate {
                tagged(StatusLabel::ConditionLimited, "condition_limited")
            } else {
                tagged(StatusLabel::Omitted, "omitted")
            }
        }
        PolicyFamily::Dosage => {
            if scores.support < g.support_gate {
                tagged(StatusLabel::Omitted, "omitted_low_support")
            } else if scores.limitation >= g.limitation_gate {
                tagged(StatusLabel::ConditionLimited, "condition_limited")
            } else {
                tagged(StatusLabel::Certified, "certified")
            }
        }
        PolicyFamily::Mixed => {
            if scores.support >= g.support_gate && scores.limitation < g.limitation_gate {
                tagged(StatusLabel::Certified, "certified")
            } else {
                let (status, tag) = select_threshold_only_tagged(scores, &policy.fallback);
                (
                    status,
                    format!("mixed.fallback.{}", tag.trim_start_matches("threshold.")),
                )
            }
        }
    }
}

/// Literature review downgrade: a selected `full` action drops to `partial`
/// when the record's source is PubMed literature and any of the record's
/// claim types is in the policy's downgrade set.
pub fn apply_review_downgrade(
    action: ActionLabel,
    source_type: SourceLabel,
    claim_types: &[ClaimTypeLabel],
    policy: &PolicyConfig,
) -> ActionLabel {
    if action == ActionLabel::Full
        && source_type == SourceLabel::PubmedLiterature
        && claim_types.iter().any(|t| policy.review_downgrade.contains(t))
    {
        ActionLabel::Partial
    } else {
        action
    }
}

/// Fixed decision flow from claim statuses to the response action.
pub fn map_action(decisions: &[ClaimDecision]) -> Result<ActionLabel> {
    if decisions.is_empty() {
        return Err(Error::Validation(
            "map_action requires at least one claim decision".into(),
        ));
    }
    let all_omitted = decisions.iter().all(|d| d.status == StatusLabel::Omitted);
    if all_omitted {
        return Ok(ActionLabel::Abstain);
    }
    if decisions.iter().any(|d| d.status == StatusLabel::Conflicting) {
        return Ok(ActionLabel::Conflict);
    }
    let critical_all_certified = decisions
        .iter()
        .filter(|d| d.critical)
        .all(|d| d.status == StatusLabel::Certified);
    if critical_all_certified {
        Ok(ActionLabel::Full)
    } else {
        Ok(ActionLabel::Partial)
    }
}

/// Collapse the four-way action space to answer/abstain.
pub fn collapse_binary(action: ActionLabel) -> BinaryAction {
    match action {
        ActionLabel::Abstain => BinaryAction::Abstain,
        _ => BinaryAction::Answer,
    }
}

/// Lift a binary action back into the four-way space (answer becomes full).
pub fn lift_binary(action: BinaryAction) -> ActionLabel {
    match action {
        BinaryAction::Answer => ActionLabel::Full,
        BinaryAction::Abstain => ActionLabel::Abstain,
    }
}

/// Metadata keys available to majority shortcut controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MajorityKey {
    Intent,
    SourceType,
    ClaimType,
}

impl MajorityKey {
    pub fn as_str(self) -> &'static str {
        match self {
            MajorityKey::Intent => "intent",
            MajorityKey::SourceType => "source_type",
            MajorityKey::ClaimType => "claim_type",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "intent" => Ok(MajorityKey::Intent),
            "source_type" => Ok(MajorityKey::SourceType),
            "claim_type" => Ok(MajorityKey::ClaimType),
            other => Err(Error::Config(format!("unknown majority key '{other}'"))),
        }
    }
}

/// Action-only majority control fit from training weak labels. Produces no
/// claim decisions and therefore no certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityPolicy {
    pub keys: Vec<MajorityKey>,
    table: BTreeMap<Vec<String>, ActionLabel>,
    global: ActionLabel,
}

fn record_key_parts(record: &QARecord, keys: &[MajorityKey]) -> Vec<String> {
    keys.iter()
        .map(|key| match key {
            MajorityKey::Intent => record.question_intent.as_string(),
            MajorityKey::SourceType => record.source_type.as_str().to_string(),
            // Record-level root claim type; records without gold claims
            // key on the explicit "none" bucket.
            MajorityKey::ClaimType => record
                .root_claim_type()
                .map(|t| t.as_str().to_string())
                .unwrap_or_else(|| "none".to_string()),
        })
        .collect()
}

fn majority_of(counts: &BTreeMap<ActionLabel, usize>) -> ActionLabel {
    // Highest count wins; ties break toward the smaller action in the fixed
    // order full < partial < conflict < abstain.
    let best = counts.values().copied().max().unwrap_or(0);
    ActionLabel::ALL
        .into_iter()
        .find(|a| counts.get(a).copied().unwrap_or(0) == best)
        .expect("non-empty count table")
}

/// Fit the per-key-combination majority action on train.
pub fn fit_majority_control(train: &Corpus, keys: &[MajorityKey]) -> Result<MajorityPolicy> {
    if train.is_empty() {
        return Err(Error::Validation(
            "majority control requires a non-empty training corpus".into(),
        ));
    }
    let mut per_key: BTreeMap<Vec<String>, BTreeMap<ActionLabel, usize>> = BTreeMap::new();
    let mut global: BTreeMap<ActionLabel, usize> = BTreeMap::new();
    for record in train {
        *per_key
            .entry(record_key_parts(record, keys))
            .or_default()
            .entry(record.gold_action)
            .or_insert(0) += 1;
        *global.entry(record.gold_action).or_insert(0) += 1;
    }
    let table = per_key
        .into_iter()
        .map(|(k, counts)| (k, majority_of(&counts)))
        .collect();
    Ok(MajorityPolicy {
        keys: keys.to_vec(),
        table,
        global: majority_of(&global),
    })
}

/// Apply a fitted majority control; unseen key combinations fall back to
/// the global train majority.
pub fn apply_majority(policy: &MajorityPolicy, record: &QARecord) -> ActionLabel {
    policy
        .table
        .get(&record_key_parts(record, &policy.keys))
        .copied()
        .unwrap_or(policy.global)
}

/// Perturbation controls over policy inputs. Gold fields are never touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbMode {
    DropIntent,
    ShuffleIntent,
    ShuffleEvidence,
}

impl PerturbMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PerturbMode::DropIntent => "drop_intent",
            PerturbMode::ShuffleIntent => "shuffle_intent",
            PerturbMode::ShuffleEvidence => "shuffle_evidence",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "drop_intent" => Ok(PerturbMode::DropIntent),
            "shuffle_intent" => Ok(PerturbMode::ShuffleIntent),
            "shuffle_evidence" => Ok(PerturbMode::ShuffleEvidence),
            other => Err(Error::Config(format!("unknown perturbation mode '{other}'"))),
        }
    }
}

/// Seeded permutation of `0..n` without fixed points where avoidable
/// (a lone fixed point is swapped with its neighbor, several are rotated).
fn shuffle_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let fixed: Vec<usize> = (0..n).filter(|&i| perm[i] == i).collect();
    match fixed.len() {
        0 => {}
        1 if n > 1 => {
            let f = fixed[0];
            let other = (f + 1) % n;
            perm.swap(f, other);
        }
        _ => {
            for pair in fixed.windows(2) {
                perm[pair[0]] = pair[1];
            }
            if let (Some(&last), Some(&first)) = (fixed.last(), fixed.first()) {
                perm[last] = first;
            }
        }
    }
    perm
}

/// Perturb one record against a pool. `drop_intent` erases the intent so
/// selection routes through the global fallback; the shuffle modes replace
/// the intent or evidence pool with another record's under a seeded
/// fixed-point-free permutation of the pool.
pub fn perturb(
    record: &QARecord,
    mode: PerturbMode,
    pool: &Corpus,
    seed: u64,
) -> Result<QARecord> {
    let mut out = record.clone();
    match mode {
        PerturbMode::DropIntent => {
            out.question_intent = IntentLabel::Other("dropped".into());
        }
        PerturbMode::ShuffleIntent | PerturbMode::ShuffleEvidence => {
            if pool.len() < 2 {
                return Err(Error::Validation(
                    "shuffle perturbations require a pool of at least 2 records".into(),
                ));
            }
            let index = pool.index_of(&record.id).ok_or_else(|| {
                Error::Validation(format!(
                    "record '{}' is not part of the perturbation pool",
                    record.id
                ))
            })?;
            let perm = shuffle_permutation(pool.len(), seed);
            let donor = &pool.records()[perm[index]];
            match mode {
                PerturbMode::ShuffleIntent => {
                    out.question_intent = donor.question_intent.clone();
                }
                PerturbMode::ShuffleEvidence => {
                    out.evidence_pool = donor.evidence_pool.clone();
                }
                PerturbMode::DropIntent => unreachable!(),
            }
        }
    }
    Ok(out)
}

/// The shipped intent-aware policy configuration.
pub const DEFAULT_POLICY: &str = include_str!("../data/policy.toml");
/// The shipped global thresholds.
pub const DEFAULT_THRESHOLDS: &str = include_str!("../data/thresholds.toml");
