//! Question intent classification and template-based claim decomposition.
//!
//! Intents are classified by keyword rules evaluated in a fixed priority
//! order (first matching rule wins, no match falls back to `indication`).
//! Decomposition instantiates the per-intent claim templates; questions
//! whose intent uses the `other:<tag>` escape hatch are routed to the
//! template set's designated fallback family.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::label::{ClaimTypeLabel, IntentLabel};
use crate::text::normalize_text;

/// A verifiable claim unit emitted by decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimSkeleton {
    pub claim_id: String,
    pub text: String,
    pub claim_type: ClaimTypeLabel,
    pub critical: bool,
    /// Equals the record's classified intent, including `other:` tags.
    pub intent: IntentLabel,
}

/// Keyword rules in priority order.
#[derive(Debug, Clone)]
pub struct IntentRuleSet {
    rules: Vec<(IntentLabel, Vec<String>)>,
}

impl IntentRuleSet {
    /// Parse the sectioned plain-text rule file: `[intent]` headers followed
    /// by one phrase per line. Section order is priority order.
    pub fn parse(contents: &str) -> Result<Self> {
        let mut rules: Vec<(IntentLabel, Vec<String>)> = Vec::new();
        for (idx, raw) in contents.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let intent = IntentLabel::parse(name).map_err(|_| {
                    Error::parse("intent rules", idx + 1, format!("unknown intent '{name}'"))
                })?;
                if matches!(intent, IntentLabel::Other(_)) {
                    return Err(Error::parse(
                        "intent rules",
                        idx + 1,
                        "rule sections must use enumerated intents",
                    ));
                }
                rules.push((intent, Vec::new()));
            } else {
                let phrase = normalize_text(line);
                match rules.last_mut() {
                    Some((_, phrases)) => phrases.push(phrase),
                    None => {
                        return Err(Error::parse(
                            "intent rules",
                            idx + 1,
                            "phrase before any [intent] section",
                        ))
                    }
                }
            }
        }
        if rules.is_empty() {
            return Err(Error::Config("intent rule file has no sections".into()));
        }
        Ok(IntentRuleSet { rules })
    }

    pub fn rules(&self) -> &[(IntentLabel, Vec<String>)] {
        &self.rules
    }
}

/// Classify a question by the first rule whose phrase occurs in the
/// normalized question text. Falls back to `indication`.
pub fn classify_intent(question: &str, rules: &IntentRuleSet) -> Result<IntentLabel> {
    if question.trim().is_empty() {
        return Err(Error::Validation("question must be non-empty".into()));
    }
    let normalized = normalize_text(question);
    for (intent, phrases) in &rules.rules {
        if phrases.iter().any(|p| normalized.contains(p.as_str())) {
            return Ok(intent.clone());
        }
    }
    Ok(IntentLabel::Indication)
}

#[derive(Debug, Deserialize)]
struct TemplateFile {
    fallback_intent: IntentLabel,
    #[serde(rename = "template")]
    templates: Vec<TemplateRow>,
}

#[derive(Debug, Deserialize)]
struct TemplateRow {
    intent: IntentLabel,
    claim_id: String,
    text: String,
    claim_type: ClaimTypeLabel,
    critical: bool,
}

/// One claim template: text with a `{question}` slot plus claim metadata.
#[derive(Debug, Clone)]
pub struct ClaimTemplate {
    pub claim_id: String,
    pub text: String,
    pub claim_type: ClaimTypeLabel,
    pub critical: bool,
}

/// Per-intent claim templates. Every enumerated intent has 1..=4 templates,
/// at least one of them critical; `other:` intents use the fallback family.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    by_intent: BTreeMap<IntentLabel, Vec<ClaimTemplate>>,
    fallback_intent: IntentLabel,
}

impl TemplateSet {
    pub fn parse(contents: &str) -> Result<Self> {
        let file: TemplateFile = toml::from_str(contents)
            .map_err(|e| Error::Config(format!("template file: {e}")))?;
        let mut by_intent: BTreeMap<IntentLabel, Vec<ClaimTemplate>> = BTreeMap::new();
        for row in file.templates {
            if matches!(row.intent, IntentLabel::Other(_)) {
                return Err(Error::Config(
                    "templates must be keyed by enumerated intents".into(),
                ));
            }
            if !row.text.contains("{question}") {
                return Err(Error::Config(format!(
                    "template '{}' is missing the {{question}} slot",
                    row.claim_id
                )));
            }
            by_intent.entry(row.intent).or_default().push(ClaimTemplate {
                claim_id: row.claim_id,
                text: row.text,
                claim_type: row.claim_type,
                critical: row.critical,
            });
        }
        let set = TemplateSet {
            by_intent,
            fallback_intent: file.fallback_intent,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        for intent in IntentLabel::ENUMERATED {
            let templates = self.by_intent.get(&intent).ok_or_else(|| {
                Error::Config(format!("intent '{}' has no templates", intent.as_string()))
            })?;
            if templates.is_empty() || templates.len() > 4 {
                return Err(Error::Config(format!(
                    "intent '{}' must have 1..=4 templates, found {}",
                    intent.as_string(),
                    templates.len()
                )));
            }
            if !templates.iter().any(|t| t.critical) {
                return Err(Error::Config(format!(
                    "intent '{}' has no critical template",
                    intent.as_string()
                )));
            }
            let mut ids: Vec<&str> = templates.iter().map(|t| t.claim_id.as_str()).collect();
            ids.sort_unstable();
            ids.dedup();
            if ids.len() != templates.len() {
                return Err(Error::Config(format!(
                    "intent '{}' has duplicate claim ids",
                    intent.as_string()
                )));
            }
        }
        if matches!(self.fallback_intent, IntentLabel::Other(_)) {
            return Err(Error::Config("fallback_intent must be enumerated".into()));
        }
        Ok(())
    }

    /// Templates backing an intent; `other:` intents route to the fallback family.
    pub fn family_for(&self, intent: &IntentLabel) -> &[ClaimTemplate] {
        let key = match intent {
            IntentLabel::Other(_) => &self.fallback_intent,
            enumerated => enumerated,
        };
        self.by_intent
            .get(key)
            .expect("validated template coverage")
    }

    /// Criticality of a claim id as declared by its template, if any template
    /// declares it. Used by the metrics layer to resolve claim criticality
    /// when a predicted claim has no gold counterpart.
    pub fn criticality_of(&self, claim_id: &str) -> Option<bool> {
        self.by_intent
            .values()
            .flatten()
            .find(|t| t.claim_id == claim_id)
            .map(|t| t.critical)
    }
}

/// Instantiate the intent's claim templates for one question.
/// Deterministic; emits 1..=4 skeletons all carrying `intent`.
pub fn decompose(
    question: &str,
    intent: &IntentLabel,
    templates: &TemplateSet,
) -> Result<Vec<ClaimSkeleton>> {
    if question.trim().is_empty() {
        return Err(Error::Validation("question must be non-empty".into()));
    }
    let family = templates.family_for(intent);
    Ok(family
        .iter()
        .map(|t| ClaimSkeleton {
            claim_id: t.claim_id.clone(),
            text: t.text.replace("{question}", question),
            claim_type: t.claim_type,
            critical: t.critical,
            intent: intent.clone(),
        })
        .collect())
}

/// The shipped intent rule table.
pub const DEFAULT_INTENT_RULES: &str = include_str!("../data/intent_rules.txt");
/// The shipped claim template table.
pub const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.toml");
/// The shipped stopword list.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
