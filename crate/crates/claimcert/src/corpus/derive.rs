//! Derived corpora and overlap auditing.
//!
//! The source-missing counterfactual removes all evidence and relabels the
//! gold side to abstain. The source/evidence-novel holdout keeps eval
//! records whose normalized source URL and evidence text both never occur
//! in train. Overlap audits measure exact-match rates over normalized keys.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::label::{ActionLabel, StatusLabel};
use crate::text::{normalize_text, normalize_url};

use super::{Corpus, QARecord};

/// Normalization key families used by overlap and novelty derivations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapKey {
    Question,
    SourceUrl,
    EvidenceText,
}

impl OverlapKey {
    pub const ALL: [OverlapKey; 3] = [
        OverlapKey::Question,
        OverlapKey::SourceUrl,
        OverlapKey::EvidenceText,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OverlapKey::Question => "question",
            OverlapKey::SourceUrl => "source_url",
            OverlapKey::EvidenceText => "evidence_text",
        }
    }
}

/// Exact-overlap rate of eval against train for one key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub key: OverlapKey,
    pub n_eval: usize,
    pub n_overlapping: usize,
    pub rate: f64,
}

/// Evidence-text key: the record's evidence item texts concatenated in
/// pool order, then normalized. An empty pool yields the empty key.
pub fn evidence_text_key(record: &QARecord) -> String {
    let joined = record
        .evidence_pool
        .iter()
        .map(|e| e.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    normalize_text(&joined)
}

fn key_value(record: &QARecord, key: OverlapKey) -> String {
    match key {
        OverlapKey::Question => normalize_text(&record.question),
        OverlapKey::SourceUrl => normalize_url(&record.source_url),
        OverlapKey::EvidenceText => evidence_text_key(record),
    }
}

/// Counterfactual corpus with all evidence removed: every pool is emptied,
/// every gold claim becomes omitted, and every gold action becomes abstain.
/// Idempotent and count-preserving.
pub fn derive_source_missing(corpus: &Corpus) -> Corpus {
    let records = corpus
        .iter()
        .map(|r| {
            let mut out = r.clone();
            out.evidence_pool.clear();
            for claim in &mut out.gold_claims {
                claim.gold_status = StatusLabel::Omitted;
            }
            out.gold_action = ActionLabel::Abstain;
            out
        })
        .collect();
    Corpus::new(records).expect("derivation preserves validity")
}

/// Eval records whose normalized source URL and evidence text are both
/// absent from train.
pub fn derive_source_evidence_novel(train: &Corpus, eval: &Corpus) -> Corpus {
    let train_urls: BTreeSet<String> = train
        .iter()
        .map(|r| key_value(r, OverlapKey::SourceUrl))
        .collect();
    let train_evidence: BTreeSet<String> = train
        .iter()
        .map(|r| key_value(r, OverlapKey::EvidenceText))
        .collect();
    let records = eval
        .iter()
        .filter(|r| {
            !train_urls.contains(&key_value(r, OverlapKey::SourceUrl))
                && !train_evidence.contains(&key_value(r, OverlapKey::EvidenceText))
        })
        .cloned()
        .collect();
    Corpus::new(records).expect("subset of a valid corpus stays valid")
}

/// Exact-match overlap rates of eval against train for every key family.
/// Empty keys participate as ordinary (empty-string) values.
pub fn audit_overlap(train: &Corpus, eval: &Corpus) -> Result<Vec<OverlapReport>> {
    if eval.is_empty() {
        return Err(Error::Validation(
            "overlap audit requires a non-empty eval corpus".into(),
        ));
    }
    let mut reports = Vec::with_capacity(OverlapKey::ALL.len());
    for key in OverlapKey::ALL {
        let train_keys: BTreeSet<String> = train.iter().map(|r| key_value(r, key)).collect();
        let n_overlapping = eval
            .iter()
            .filter(|r| train_keys.contains(&key_value(r, key)))
            .count();
        reports.push(OverlapReport {
            key,
            n_eval: eval.len(),
            n_overlapping,
            rate: n_overlapping as f64 / eval.len() as f64,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::sample_record;
    use crate::corpus::EvidenceItem;
    use crate::label::SourceLabel;

    fn record_with(id: &str, url: &str, evidence: &str) -> QARecord {
        let mut r = sample_record(id);
        r.source_url = url.to_string();
        r.evidence_pool = vec![EvidenceItem {
            evidence_id: "e1".into(),
            text: evidence.to_string(),
            source_type: SourceLabel::Openfda,
            source_url: url.to_string(),
        }];
        r
    }

    #[test]
    fn source_missing_clears_and_relabels() {
        let mut rec = sample_record("r");
        for _ in 0..4 {
            let mut e = rec.evidence_pool[0].clone();
            e.evidence_id = format!("e{}", rec.evidence_pool.len() + 1);
            rec.evidence_pool.push(e);
        }
        assert_eq!(rec.evidence_pool.len(), 5);
        let corpus = Corpus::new(vec![rec]).unwrap();
        let derived = derive_source_missing(&corpus);
        assert_eq!(derived.len(), 1);
        let out = &derived.records()[0];
        assert!(out.evidence_pool.is_empty());
        assert_eq!(out.gold_action, ActionLabel::Abstain);
        assert!(out
            .gold_claims
            .iter()
            .all(|c| c.gold_status == StatusLabel::Omitted));
    }

    #[test]
    fn source_missing_idempotent() {
        let corpus = Corpus::new(vec![sample_record("a"), sample_record("b")]).unwrap();
        let once = derive_source_missing(&corpus);
        let twice = derive_source_missing(&once);
        assert_eq!(once, twice);
        assert_eq!(once.len(), corpus.len());
    }

    #[test]
    fn novel_holdout_three_record_fixture() {
        // train holds urlA; eval has urlA (shared url), urlB with novel
        // evidence, and urlB with evidence copied from train.
        let train = Corpus::new(vec![record_with("t1", "https://a.org/x", "alpha beta")]).unwrap();
        let eval = Corpus::new(vec![
            record_with("e1", "https://a.org/x", "novel words here"),
            record_with("e2", "https://b.org/y", "totally new evidence"),
            record_with("e3", "https://b.org/z", "alpha beta"),
        ])
        .unwrap();
        let novel = derive_source_evidence_novel(&train, &eval);
        assert_eq!(novel.len(), 1);
        assert_eq!(novel.records()[0].id, "e2");
    }

    #[test]
    fn novel_holdout_is_disjoint_subset() {
        let train = Corpus::new(vec![record_with("t", "a.org", "x y")]).unwrap();
        let eval = Corpus::new(vec![
            record_with("e1", "A.ORG/", "q r"),
            record_with("e2", "b.org", "x  Y"),
        ])
        .unwrap();
        // e1 shares the url after normalization, e2 shares evidence text.
        assert!(derive_source_evidence_novel(&train, &eval).is_empty());
    }

    #[test]
    fn overlap_rates() {
        let train = Corpus::new(vec![
            record_with("t1", "a.org/1", "alpha"),
            record_with("t2", "a.org/2", "beta"),
        ])
        .unwrap();
        // 2 of 4 eval urls occur in train.
        let eval = Corpus::new(vec![
            record_with("e1", "a.org/1", "w1"),
            record_with("e2", "a.org/2", "w2"),
            record_with("e3", "c.org/3", "w3"),
            record_with("e4", "c.org/4", "w4"),
        ])
        .unwrap();
        let reports = audit_overlap(&train, &eval).unwrap();
        let url = reports
            .iter()
            .find(|r| r.key == OverlapKey::SourceUrl)
            .unwrap();
        assert_eq!(url.n_overlapping, 2);
        assert!((url.rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn overlap_self_is_one_disjoint_is_zero() {
        let x = Corpus::new(vec![
            record_with("a", "a.org", "alpha"),
            record_with("b", "b.org", "beta"),
        ])
        .unwrap();
        for report in audit_overlap(&x, &x).unwrap() {
            assert_eq!(report.rate, 1.0, "key {:?}", report.key);
        }
        let mut disjoint_records = Vec::new();
        for (i, r) in x.iter().enumerate() {
            let mut c = r.clone();
            c.id = format!("d{i}");
            c.question = format!("entirely different question {i}");
            c.source_url = format!("novel{i}.example");
            c.evidence_pool[0].text = format!("unseen evidence {i}");
            disjoint_records.push(c);
        }
        let disjoint = Corpus::new(disjoint_records).unwrap();
        for report in audit_overlap(&x, &disjoint).unwrap() {
            assert_eq!(report.rate, 0.0, "key {:?}", report.key);
        }
    }

    #[test]
    fn overlap_requires_nonempty_eval() {
        let x = Corpus::new(vec![sample_record("a")]).unwrap();
        let empty = Corpus::default();
        assert!(audit_overlap(&x, &empty).is_err());
    }
}
