//! Claim-evidence relation scoring.
//!
//! Each claim-evidence pair receives a (support, conflict, limitation)
//! vector in [0,1]^3. The shipped scorer combines token-set overlap with a
//! cue lexicon: every coordinate is `clamp(alpha * overlap + beta * cue_hit)`
//! where `overlap` is the fraction of the claim's (stopword-filtered) tokens
//! found in the evidence and `cue_hit` is the maximum weight of that
//! coordinate's cue phrases occurring as substrings of the normalized
//! evidence text. Scores are pooled across evidence with a coordinate-wise
//! maximum so one strong passage can activate a relation signal.
//!
//! The scorer is a pluggable seam: anything implementing [`RelationScorer`]
//! can replace the cue scorer behind the same pooling and selection code.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::EvidenceItem;
use crate::decompose::ClaimSkeleton;
use crate::error::{Error, Result};
use crate::label::{ClaimTypeLabel, SourceLabel};
use crate::text::{normalize_text, token_set};

/// Relation scores for one claim-evidence pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationVector {
    pub support: f64,
    pub conflict: f64,
    pub limitation: f64,
}

impl RelationVector {
    pub const ZERO: RelationVector = RelationVector {
        support: 0.0,
        conflict: 0.0,
        limitation: 0.0,
    };

    pub fn in_unit_cube(&self) -> bool {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        ok(self.support) && ok(self.conflict) && ok(self.limitation)
    }
}

/// Max-pooled scores with, per coordinate, the evidence id achieving the
/// maximum (first in pool order on ties; absent for an empty pool).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PooledScores {
    pub support: f64,
    pub conflict: f64,
    pub limitation: f64,
    pub support_evidence: Option<String>,
    pub conflict_evidence: Option<String>,
    pub limitation_evidence: Option<String>,
}

impl PooledScores {
    pub fn vector(&self) -> RelationVector {
        RelationVector {
            support: self.support,
            conflict: self.conflict,
            limitation: self.limitation,
        }
    }
}

/// Sections of the cue lexicon file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CueSection {
    Support,
    Conflict,
    Limitation,
    DosageInstruction,
}

/// Weighted cue phrases for the three relation coordinates plus the
/// dosage-instruction list used by the scoped source prior.
#[derive(Debug, Clone)]
pub struct CueLexicon {
    pub support: Vec<(String, f64)>,
    pub conflict: Vec<(String, f64)>,
    pub limitation: Vec<(String, f64)>,
    pub dosage_instruction: Vec<(String, f64)>,
}

impl CueLexicon {
    /// Parse the sectioned `phrase<TAB>weight` lexicon file.
    pub fn parse(contents: &str) -> Result<Self> {
        let mut lexicon = CueLexicon {
            support: Vec::new(),
            conflict: Vec::new(),
            limitation: Vec::new(),
            dosage_instruction: Vec::new(),
        };
        let mut section: Option<CueSection> = None;
        for (idx, raw) in contents.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(match name {
                    "support" => CueSection::Support,
                    "conflict" => CueSection::Conflict,
                    "limitation" => CueSection::Limitation,
                    "dosage_instruction" => CueSection::DosageInstruction,
                    other => {
                        return Err(Error::parse(
                            "cue lexicon",
                            idx + 1,
                            format!("unknown section '{other}'"),
                        ))
                    }
                });
                continue;
            }
            let (phrase, weight) = line.split_once('\t').ok_or_else(|| {
                Error::parse("cue lexicon", idx + 1, "expected 'phrase<TAB>weight'")
            })?;
            let phrase = normalize_text(phrase);
            if phrase.is_empty() {
                return Err(Error::parse("cue lexicon", idx + 1, "empty phrase"));
            }
            let weight: f64 = weight.trim().parse().map_err(|_| {
                Error::parse("cue lexicon", idx + 1, format!("bad weight '{weight}'"))
            })?;
            if !(weight > 0.0 && weight <= 1.0) {
                return Err(Error::parse(
                    "cue lexicon",
                    idx + 1,
                    format!("weight {weight} outside (0, 1]"),
                ));
            }
            let target = match section {
                Some(CueSection::Support) => &mut lexicon.support,
                Some(CueSection::Conflict) => &mut lexicon.conflict,
                Some(CueSection::Limitation) => &mut lexicon.limitation,
                Some(CueSection::DosageInstruction) => &mut lexicon.dosage_instruction,
                None => {
                    return Err(Error::parse(
                        "cue lexicon",
                        idx + 1,
                        "phrase before any section header",
                    ))
                }
            };
            target.push((phrase, weight));
        }
        if lexicon.support.is_empty()
            || lexicon.conflict.is_empty()
            || lexicon.limitation.is_empty()
        {
            return Err(Error::Config(
                "cue lexicon must provide support, conflict, and limitation phrases".into(),
            ));
        }
        Ok(lexicon)
    }

    /// Best phrase weight by family, looked up by exact phrase text.
    /// Convenience for the synthetic generator, which injects phrases from
    /// this same lexicon.
    pub fn weight_of(&self, family: &str, phrase: &str) -> Option<f64> {
        let list = match family {
            "support" => &self.support,
            "conflict" => &self.conflict,
            "limitation" => &self.limitation,
            "dosage_instruction" => &self.dosage_instruction,
            _ => return None,
        };
        list.iter()
            .find(|(p, _)| p == phrase)
            .map(|(_, w)| *w)
    }
}

/// Scoring parameters: mixing weights, the dosage-rescue support floor, and
/// the stopword list applied during tokenization.
#[derive(Debug, Clone)]
pub struct ScoreParams {
    pub alpha: f64,
    pub beta: f64,
    pub rescue_floor: f64,
    pub stopwords: BTreeSet<String>,
}

impl ScoreParams {
    pub fn new(stopwords: BTreeSet<String>) -> Self {
        ScoreParams {
            alpha: 0.5,
            beta: 0.5,
            rescue_floor: 0.60,
            stopwords,
        }
    }
}

/// Pluggable relation scorer seam. The cue scorer is the shipped
/// implementation; external scorers plug in behind the same interface.
pub trait RelationScorer {
    fn score(&self, claim: &ClaimSkeleton, evidence: &EvidenceItem) -> RelationVector;
}

/// The shipped lexical scorer.
pub struct CueScorer<'a> {
    pub lexicon: &'a CueLexicon,
    pub params: &'a ScoreParams,
}

impl RelationScorer for CueScorer<'_> {
    fn score(&self, claim: &ClaimSkeleton, evidence: &EvidenceItem) -> RelationVector {
        score_pair(claim, evidence, self.lexicon, self.params)
    }
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn max_cue_weight(normalized_evidence: &str, cues: &[(String, f64)]) -> f64 {
    cues.iter()
        .filter(|(phrase, _)| normalized_evidence.contains(phrase.as_str()))
        .map(|(_, w)| *w)
        .fold(0.0, f64::max)
}

/// Score one claim-evidence pair. Empty evidence text scores (0, 0, 0);
/// a claim whose tokens are all stopwords contributes zero overlap.
pub fn score_pair(
    claim: &ClaimSkeleton,
    evidence: &EvidenceItem,
    lexicon: &CueLexicon,
    params: &ScoreParams,
) -> RelationVector {
    let normalized = normalize_text(&evidence.text);
    if normalized.is_empty() {
        return RelationVector::ZERO;
    }
    let claim_tokens = token_set(&claim.text, &params.stopwords);
    let evidence_tokens = token_set(&normalized, &params.stopwords);
    let overlap = if claim_tokens.is_empty() {
        0.0
    } else {
        let shared = claim_tokens.intersection(&evidence_tokens).count();
        shared as f64 / claim_tokens.len() as f64
    };
    let coordinate = |cues: &[(String, f64)]| {
        clamp01(params.alpha * overlap + params.beta * max_cue_weight(&normalized, cues))
    };
    RelationVector {
        support: coordinate(&lexicon.support),
        conflict: coordinate(&lexicon.conflict),
        limitation: coordinate(&lexicon.limitation),
    }
}

/// Coordinate-wise max pooling. An empty pool yields zeros with no
/// contributing evidence; ties keep the first pair in pool order.
pub fn pool(pairs: &[(String, RelationVector)]) -> PooledScores {
    let mut pooled = PooledScores::default();
    for (evidence_id, vector) in pairs {
        if vector.support > pooled.support {
            pooled.support = vector.support;
            pooled.support_evidence = Some(evidence_id.clone());
        } else if pooled.support_evidence.is_none() {
            pooled.support_evidence = Some(evidence_id.clone());
        }
        if vector.conflict > pooled.conflict {
            pooled.conflict = vector.conflict;
            pooled.conflict_evidence = Some(evidence_id.clone());
        } else if pooled.conflict_evidence.is_none() {
            pooled.conflict_evidence = Some(evidence_id.clone());
        }
        if vector.limitation > pooled.limitation {
            pooled.limitation = vector.limitation;
            pooled.limitation_evidence = Some(evidence_id.clone());
        } else if pooled.limitation_evidence.is_none() {
            pooled.limitation_evidence = Some(evidence_id.clone());
        }
    }
    pooled
}

/// Claim types eligible for the openFDA dosage-instruction rescue.
pub fn is_dosage_claim(claim_type: ClaimTypeLabel) -> bool {
    matches!(
        claim_type,
        ClaimTypeLabel::Dosage | ClaimTypeLabel::DosageAdjustment | ClaimTypeLabel::MissedDose
    )
}

/// Scoped source-family prior: openFDA label evidence carrying an explicit
/// dosage-instruction cue lifts a dosage-family claim's pooled support to at
/// least the rescue floor. Never decreases support, never touches conflict
/// or limitation.
pub fn apply_dosage_rescue(
    claim: &ClaimSkeleton,
    pooled: &PooledScores,
    evidence_pool: &[EvidenceItem],
    lexicon: &CueLexicon,
    params: &ScoreParams,
) -> PooledScores {
    if !is_dosage_claim(claim.claim_type) {
        return pooled.clone();
    }
    let rescuer = evidence_pool.iter().find(|e| {
        e.source_type == SourceLabel::Openfda && {
            let normalized = normalize_text(&e.text);
            lexicon
                .dosage_instruction
                .iter()
                .any(|(phrase, _)| normalized.contains(phrase.as_str()))
        }
    });
    let mut out = pooled.clone();
    if let Some(evidence) = rescuer {
        if params.rescue_floor > out.support {
            out.support = params.rescue_floor;
            out.support_evidence = Some(evidence.evidence_id.clone());
        }
    }
    out
}

/// The shipped cue lexicon.
pub const DEFAULT_CUE_LEXICON: &str = include_str!("../data/cue_lexicon.txt");
