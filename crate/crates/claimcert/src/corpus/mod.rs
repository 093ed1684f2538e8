//! Corpus data model and JSONL ingestion.
//!
//! A corpus is an ordered list of QA records, one JSON object per line.
//! Field names follow the documented schema exactly:
//! `id, question, question_intent, source_type, source_url, evidence_pool,
//! gold_claims, gold_action`. Records are immutable after load; every
//! operation over corpora is a pure function.

mod derive;
pub mod synth;

pub use derive::{
    audit_overlap, derive_source_evidence_novel, derive_source_missing, evidence_text_key,
    OverlapKey, OverlapReport,
};

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{ActionLabel, ClaimTypeLabel, IntentLabel, SourceLabel, StatusLabel};

/// One retrieved evidence passage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub evidence_id: String,
    pub text: String,
    pub source_type: SourceLabel,
    pub source_url: String,
}

/// Construction-derived weak label for one claim unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldClaim {
    /// Template identifier, intentionally reusable across records.
    pub claim_id: String,
    pub text: String,
    pub claim_type: ClaimTypeLabel,
    pub critical: bool,
    pub gold_status: StatusLabel,
}

impl GoldClaim {
    /// Gold-usable claims are those whose status may be expressed.
    pub fn is_usable(&self) -> bool {
        self.gold_status.is_expressed()
    }
}

/// One QA example: question, intent, provenance, evidence pool, and the
/// gold side of the weak-label protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QARecord {
    pub id: String,
    pub question: String,
    pub question_intent: IntentLabel,
    pub source_type: SourceLabel,
    pub source_url: String,
    pub evidence_pool: Vec<EvidenceItem>,
    pub gold_claims: Vec<GoldClaim>,
    pub gold_action: ActionLabel,
}

impl QARecord {
    /// Per-record schema invariants (evidence ids unique, claim ids non-empty).
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Validation("record id must be non-empty".into()));
        }
        let mut seen = BTreeSet::new();
        for item in &self.evidence_pool {
            if item.evidence_id.is_empty() {
                return Err(Error::Validation(format!(
                    "record '{}': evidence_id must be non-empty",
                    self.id
                )));
            }
            if !seen.insert(item.evidence_id.as_str()) {
                return Err(Error::Validation(format!(
                    "record '{}': duplicate evidence_id '{}'",
                    self.id, item.evidence_id
                )));
            }
        }
        for claim in &self.gold_claims {
            if claim.claim_id.is_empty() {
                return Err(Error::Validation(format!(
                    "record '{}': claim_id must be non-empty",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Gold claim ids with an expressible status.
    pub fn gold_usable_ids(&self) -> BTreeSet<&str> {
        self.gold_claims
            .iter()
            .filter(|c| c.is_usable())
            .map(|c| c.claim_id.as_str())
            .collect()
    }

    /// Record-level root claim type: the first gold claim's type, used by
    /// claim-type slices and metadata-only majority controls.
    pub fn root_claim_type(&self) -> Option<ClaimTypeLabel> {
        self.gold_claims.first().map(|c| c.claim_type)
    }
}

/// Ordered, validated list of records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    records: Vec<QARecord>,
}

impl Corpus {
    /// Build from records, enforcing id uniqueness and per-record invariants.
    pub fn new(records: Vec<QARecord>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for record in &records {
            record.validate()?;
            if !ids.insert(record.id.clone()) {
                return Err(Error::Validation(format!(
                    "duplicate record id '{}'",
                    record.id
                )));
            }
        }
        Ok(Corpus { records })
    }

    pub fn records(&self) -> &[QARecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, QARecord> {
        self.records.iter()
    }

    /// Position of a record id within the corpus, if present.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.id == id)
    }

    /// Serialize to the documented JSONL format, one record per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serialization"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a QARecord;
    type IntoIter = std::slice::Iter<'a, QARecord>;
    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// Load and validate a JSONL corpus file. Parse and duplicate-id errors
/// name the offending 1-based line.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&contents, &path.display().to_string())
}

/// Parse JSONL corpus text. `origin` names the source in errors.
pub fn parse_corpus(contents: &str, origin: &str) -> Result<Corpus> {
    let mut records = Vec::new();
    let mut ids: BTreeSet<String> = BTreeSet::new();
    for (idx, line) in contents.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: QARecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        record
            .validate()
            .map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        if !ids.insert(record.id.clone()) {
            return Err(Error::parse(
                origin,
                lineno,
                format!("duplicate record id '{}'", record.id),
            ));
        }
        records.push(record);
    }
    Ok(Corpus { records })
}

/// PubMedQA conclusion labels mapped onto the action space:
/// yes -> full, no -> conflict, maybe -> partial.
pub fn map_pubmedqa_label(label: &str) -> Result<ActionLabel> {
    match label {
        "yes" => Ok(ActionLabel::Full),
        "no" => Ok(ActionLabel::Conflict),
        "maybe" => Ok(ActionLabel::Partial),
        other => Err(Error::Validation(format!(
            "unknown pubmedqa label '{other}' (expected yes/no/maybe)"
        ))),
    }
}
