//! Seeded synthetic corpus generation.
//!
//! The generator inverts the certification protocol: it draws an intent and
//! a gold action, derives the claim skeletons from the same templates the
//! pipeline uses, assigns claim statuses consistent with the action, and
//! then writes evidence whose cue phrases come from the same lexicon the
//! relation scorer reads. With the default injection rates the cue scorer
//! recovers every gold status exactly, so generated corpora exercise the
//! full pipeline end to end.
//!
//! Status assignment per action:
//! * `full`: every claim certified (record sources avoid PubMed literature
//!   so the review downgrade cannot contradict the gold action).
//! * `partial`: a seeded prefix of the claims (always including the first,
//!   critical one) is condition-limited, the rest certified.
//! * `conflict`: every claim conflicting.
//! * `abstain`: every claim omitted and the evidence pool left empty.
//!
//! Evidence text is assembled from three parts: a deterministic sample of
//! the claim's content tokens (the echo), the status's cue phrase(s), and
//! neutral filler words. Echo size is capped by `echo_fraction` so that the
//! overlap term alone can never cross a selection gate.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::decompose::{decompose, TemplateSet};
use crate::error::{Error, Result};
use crate::label::{ActionLabel, IntentLabel, SourceLabel, StatusLabel};
use crate::relation::CueLexicon;
use crate::text::token_set;

use super::{Corpus, EvidenceItem, GoldClaim, QARecord};

const DRUGS: [&str; 10] = [
    "relastat",
    "corvamide",
    "zentrilin",
    "fabrovex",
    "morvictan",
    "quillarone",
    "tavimexol",
    "bresalor",
    "peltrazine",
    "velnoprast",
];

const CONDITIONS: [&str; 10] = [
    "hypertension",
    "migraine",
    "asthma",
    "depression",
    "arthritis",
    "insomnia",
    "epilepsy",
    "anemia",
    "glaucoma",
    "bronchitis",
];

const FILLERS: [&str; 10] = [
    "archive",
    "registry",
    "ledger",
    "catalog",
    "bulletin",
    "annex",
    "footnote",
    "compendium",
    "gazette",
    "almanac",
];

// Cue phrases injected per status; all must exist in the shipped lexicon
// (checked at generation time).
const SUPPORT_CUE: &str = "explicitly indicated for";
const MODERATE_SUPPORT_CUE: &str = "supported by published findings";
const LIMITATION_CUE: &str = "only under close supervision";
const CONFLICT_CUES: [&str; 2] = ["is contraindicated in", "should not be used"];

/// Per-status cue injection probabilities. At the default of 1.0 the
/// generated labels are exactly recoverable by the cue scorer; lower rates
/// inject label noise.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default)]
pub struct CueRates {
    pub support: f64,
    pub limitation: f64,
    pub conflict: f64,
}

impl Default for CueRates {
    fn default() -> Self {
        CueRates {
            support: 1.0,
            limitation: 1.0,
            conflict: 1.0,
        }
    }
}

/// Generator configuration (a documented key-value file; TOML).
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub count: usize,
    /// Weights over enumerated intents; zero-weight intents never occur.
    pub intent_mix: BTreeMap<String, f64>,
    /// Weights over gold actions.
    pub action_mix: BTreeMap<String, f64>,
    pub cue_rates: CueRates,
    /// Probability of appending one cue-free filler evidence item.
    pub distractor_rate: f64,
    /// Fraction of a claim's content tokens echoed into its evidence.
    pub echo_fraction: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let intent_mix = IntentLabel::ENUMERATED
            .iter()
            .map(|i| (i.as_string(), 1.0))
            .collect();
        let action_mix = [
            (ActionLabel::Full, 0.45),
            (ActionLabel::Partial, 0.35),
            (ActionLabel::Conflict, 0.12),
            (ActionLabel::Abstain, 0.08),
        ]
        .into_iter()
        .map(|(a, w)| (a.as_str().to_string(), w))
        .collect();
        GeneratorConfig {
            count: 100,
            intent_mix,
            action_mix,
            cue_rates: CueRates::default(),
            distractor_rate: 0.5,
            echo_fraction: 0.55,
        }
    }
}

impl GeneratorConfig {
    pub fn parse(contents: &str) -> Result<Self> {
        let config: GeneratorConfig =
            toml::from_str(contents).map_err(|e| Error::Config(format!("generator config: {e}")))?;
        config.validated()
    }

    fn validated(self) -> Result<Self> {
        if self.count == 0 {
            return Err(Error::Config("generator count must be at least 1".into()));
        }
        let check_mix = |name: &str, mix: &BTreeMap<String, f64>| -> Result<()> {
            if mix.values().any(|w| *w < 0.0 || !w.is_finite()) {
                return Err(Error::Config(format!("{name} weights must be >= 0")));
            }
            if mix.values().sum::<f64>() <= 0.0 {
                return Err(Error::Config(format!("{name} weights must sum to > 0")));
            }
            Ok(())
        };
        check_mix("intent_mix", &self.intent_mix)?;
        check_mix("action_mix", &self.action_mix)?;
        for (name, rate) in [
            ("cue_rates.support", self.cue_rates.support),
            ("cue_rates.limitation", self.cue_rates.limitation),
            ("cue_rates.conflict", self.cue_rates.conflict),
            ("distractor_rate", self.distractor_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name}={rate} outside [0,1]")));
            }
        }
        if !(self.echo_fraction > 0.0 && self.echo_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "echo_fraction={} outside (0,1]",
                self.echo_fraction
            )));
        }
        Ok(self)
    }

    fn intent_weights(&self) -> Result<Vec<(IntentLabel, f64)>> {
        let mut out = Vec::new();
        for (key, weight) in &self.intent_mix {
            let intent = IntentLabel::parse(key)?;
            if matches!(intent, IntentLabel::Other(_)) {
                return Err(Error::Config(
                    "intent_mix supports enumerated intents only".into(),
                ));
            }
            if *weight > 0.0 {
                out.push((intent, *weight));
            }
        }
        if out.is_empty() {
            return Err(Error::Config("intent_mix has no positive weights".into()));
        }
        Ok(out)
    }

    fn action_weights(&self) -> Result<Vec<(ActionLabel, f64)>> {
        let mut out = Vec::new();
        for (key, weight) in &self.action_mix {
            let action = ActionLabel::parse(key)?;
            if *weight > 0.0 {
                out.push((action, *weight));
            }
        }
        if out.is_empty() {
            return Err(Error::Config("action_mix has no positive weights".into()));
        }
        Ok(out)
    }
}

fn weighted_choice<'a, T>(rng: &mut ChaCha8Rng, items: &'a [(T, f64)]) -> &'a T {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut x = rng.gen::<f64>() * total;
    for (item, weight) in items {
        if x < *weight {
            return item;
        }
        x -= weight;
    }
    &items.last().expect("non-empty weighted items").0
}

fn question_for(intent: &IntentLabel, drug: &str, condition: &str, other_drug: &str) -> String {
    match intent {
        IntentLabel::Indication => format!("Is {drug} indicated for {condition}?"),
        IntentLabel::Dosage => format!("What is the recommended dose of {drug} for {condition}?"),
        IntentLabel::DosageAdjustment => {
            format!("Does {drug} require dose adjustment in patients with kidney impairment?")
        }
        IntentLabel::MissedDose => format!("What should I do if I missed a dose of {drug}?"),
        IntentLabel::Contraindication => {
            format!("Is {drug} contraindicated in patients with {condition}?")
        }
        IntentLabel::Interaction => format!("Does {drug} interact with {other_drug}?"),
        IntentLabel::Pregnancy => format!("Can I take {drug} while pregnant for {condition}?"),
        IntentLabel::Lactation => format!("Is {drug} safe while breastfeeding for {condition}?"),
        IntentLabel::Monitoring => {
            format!("What monitoring is required while taking {drug} for {condition}?")
        }
        IntentLabel::SpecialPopulation => {
            format!("Is {drug} appropriate for elderly patients with {condition}?")
        }
        IntentLabel::ResearchQuestion => {
            format!("Does the research show that {drug} improves {condition}?")
        }
        IntentLabel::Other(_) => format!("Is {drug} indicated for {condition}?"),
    }
}

const SOURCE_WEIGHTS: [(SourceLabel, f64); 4] = [
    (SourceLabel::Openfda, 0.5),
    (SourceLabel::FdaFaers, 0.15),
    (SourceLabel::PubmedLiterature, 0.2),
    (SourceLabel::Pubmedqa, 0.15),
];

/// Assets the generator shares with the pipeline: the claim templates and
/// the cue lexicon (by design the very same file the scorer reads), plus
/// the stopword list used to compute claim content tokens.
pub struct GeneratorAssets<'a> {
    pub templates: &'a TemplateSet,
    pub lexicon: &'a CueLexicon,
    pub stopwords: &'a std::collections::BTreeSet<String>,
}

fn check_lexicon_phrases(lexicon: &CueLexicon) -> Result<()> {
    let mut missing = Vec::new();
    for (family, phrase) in [
        ("support", SUPPORT_CUE),
        ("support", MODERATE_SUPPORT_CUE),
        ("limitation", LIMITATION_CUE),
        ("conflict", CONFLICT_CUES[0]),
        ("conflict", CONFLICT_CUES[1]),
    ] {
        if lexicon.weight_of(family, phrase).is_none() {
            missing.push(format!("{family}:{phrase}"));
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "generator cue phrases missing from lexicon: {}",
            missing.join(", ")
        )))
    }
}

fn echo_tokens(
    rng: &mut ChaCha8Rng,
    claim_text: &str,
    stopwords: &std::collections::BTreeSet<String>,
    echo_fraction: f64,
) -> Vec<String> {
    let tokens: Vec<String> = token_set(claim_text, stopwords).into_iter().collect();
    if tokens.is_empty() {
        return Vec::new();
    }
    let target = ((tokens.len() as f64 * echo_fraction).floor() as usize).max(1);
    let mut indices: Vec<usize> = (0..tokens.len()).collect();
    // Seeded partial Fisher-Yates: pick `target` distinct tokens.
    for i in 0..target.min(indices.len()) {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
    }
    let mut chosen: Vec<String> = indices
        .into_iter()
        .take(target)
        .map(|i| tokens[i].clone())
        .collect();
    chosen.sort();
    chosen
}

fn filler_words(rng: &mut ChaCha8Rng) -> String {
    let n = 2 + rng.gen_range(0..3usize);
    (0..n)
        .map(|_| FILLERS[rng.gen_range(0..FILLERS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn evidence_text_for(
    rng: &mut ChaCha8Rng,
    claim_text: &str,
    status: StatusLabel,
    config: &GeneratorConfig,
    stopwords: &std::collections::BTreeSet<String>,
) -> String {
    let echo = echo_tokens(rng, claim_text, stopwords, config.echo_fraction).join(" ");
    let mut cues: Vec<&str> = Vec::new();
    match status {
        StatusLabel::Certified => {
            if rng.gen::<f64>() < config.cue_rates.support {
                cues.push(SUPPORT_CUE);
            }
        }
        StatusLabel::ConditionLimited => {
            if rng.gen::<f64>() < config.cue_rates.limitation {
                cues.push(LIMITATION_CUE);
            }
            if rng.gen::<f64>() < config.cue_rates.support {
                cues.push(MODERATE_SUPPORT_CUE);
            }
        }
        StatusLabel::Conflicting => {
            let cue = CONFLICT_CUES[rng.gen_range(0..CONFLICT_CUES.len())];
            if rng.gen::<f64>() < config.cue_rates.conflict {
                cues.push(cue);
            }
        }
        StatusLabel::Omitted => {}
    }
    let filler = filler_words(rng);
    let mut parts = Vec::new();
    if !echo.is_empty() {
        parts.push(echo);
    }
    for cue in cues {
        parts.push(cue.to_string());
    }
    parts.push(filler);
    parts.join(". ")
}

/// Generate a deterministic corpus for a config and seed. Equal seeds give
/// byte-identical corpora; different seeds differ.
pub fn generate_synthetic(
    config: &GeneratorConfig,
    seed: u64,
    assets: &GeneratorAssets<'_>,
) -> Result<Corpus> {
    let config = config.clone().validated()?;
    check_lexicon_phrases(assets.lexicon)?;
    let intent_weights = config.intent_weights()?;
    let action_weights = config.action_weights()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(config.count);

    for index in 0..config.count {
        let intent = weighted_choice(&mut rng, &intent_weights).clone();
        let action = *weighted_choice(&mut rng, &action_weights);
        let drug = DRUGS[rng.gen_range(0..DRUGS.len())];
        let condition = CONDITIONS[rng.gen_range(0..CONDITIONS.len())];
        let other_drug = DRUGS[rng.gen_range(0..DRUGS.len())];
        let question = question_for(&intent, drug, condition, other_drug);

        let mut source = *weighted_choice(&mut rng, &SOURCE_WEIGHTS);
        if action == ActionLabel::Full && source == SourceLabel::PubmedLiterature {
            // Keep gold full actions out of the review-downgrade path.
            source = SourceLabel::Openfda;
        }

        let skeletons = decompose(&question, &intent, assets.templates)?;
        let statuses: Vec<StatusLabel> = match action {
            ActionLabel::Full => vec![StatusLabel::Certified; skeletons.len()],
            ActionLabel::Conflict => vec![StatusLabel::Conflicting; skeletons.len()],
            ActionLabel::Abstain => vec![StatusLabel::Omitted; skeletons.len()],
            ActionLabel::Partial => {
                // Limit a prefix that always includes the first (critical) claim.
                let limited = rng.gen_range(1..=skeletons.len());
                (0..skeletons.len())
                    .map(|i| {
                        if i < limited {
                            StatusLabel::ConditionLimited
                        } else {
                            StatusLabel::Certified
                        }
                    })
                    .collect()
            }
        };

        let id = format!("syn-{index:05}");
        let source_url = format!(
            "https://example.org/{}/{drug}-{condition}-{index}",
            source.as_str()
        );
        let mut evidence_pool = Vec::new();
        if action != ActionLabel::Abstain {
            for (k, (skeleton, status)) in skeletons.iter().zip(&statuses).enumerate() {
                let text =
                    evidence_text_for(&mut rng, &skeleton.text, *status, &config, assets.stopwords);
                evidence_pool.push(EvidenceItem {
                    evidence_id: format!("e{}", k + 1),
                    text,
                    source_type: source,
                    source_url: source_url.clone(),
                });
            }
            if rng.gen::<f64>() < config.distractor_rate {
                evidence_pool.push(EvidenceItem {
                    evidence_id: format!("e{}", evidence_pool.len() + 1),
                    text: filler_words(&mut rng),
                    source_type: source,
                    source_url: source_url.clone(),
                });
            }
        }

        let gold_claims = skeletons
            .iter()
            .zip(&statuses)
            .map(|(skeleton, status)| GoldClaim {
                claim_id: skeleton.claim_id.clone(),
                text: skeleton.text.clone(),
                claim_type: skeleton.claim_type,
                critical: skeleton.critical,
                gold_status: *status,
            })
            .collect();

        records.push(QARecord {
            id,
            question,
            question_intent: intent,
            source_type: source,
            source_url,
            evidence_pool,
            gold_claims,
            gold_action: action,
        });
    }

    Corpus::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{
        classify_intent, IntentRuleSet, DEFAULT_INTENT_RULES, DEFAULT_STOPWORDS, DEFAULT_TEMPLATES,
    };
    use crate::relation::DEFAULT_CUE_LEXICON;
    use crate::text::parse_stopwords;

    fn fixtures() -> (TemplateSet, CueLexicon, std::collections::BTreeSet<String>) {
        (
            TemplateSet::parse(DEFAULT_TEMPLATES).unwrap(),
            CueLexicon::parse(DEFAULT_CUE_LEXICON).unwrap(),
            parse_stopwords(DEFAULT_STOPWORDS),
        )
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (templates, lexicon, stopwords) = fixtures();
        let assets = GeneratorAssets {
            templates: &templates,
            lexicon: &lexicon,
            stopwords: &stopwords,
        };
        let config = GeneratorConfig {
            count: 50,
            ..Default::default()
        };
        let a = generate_synthetic(&config, 7, &assets).unwrap();
        let b = generate_synthetic(&config, 7, &assets).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl(), "same seed must be byte-identical");
        let c = generate_synthetic(&config, 8, &assets).unwrap();
        assert_ne!(a.to_jsonl(), c.to_jsonl(), "different seeds must differ");
    }

    #[test]
    fn abstain_only_mix_empties_pools() {
        let (templates, lexicon, stopwords) = fixtures();
        let assets = GeneratorAssets {
            templates: &templates,
            lexicon: &lexicon,
            stopwords: &stopwords,
        };
        let config = GeneratorConfig {
            count: 20,
            action_mix: [("abstain".to_string(), 1.0)].into_iter().collect(),
            ..Default::default()
        };
        let corpus = generate_synthetic(&config, 3, &assets).unwrap();
        assert_eq!(corpus.len(), 20);
        for r in &corpus {
            assert!(r.evidence_pool.is_empty());
            assert_eq!(r.gold_action, ActionLabel::Abstain);
            assert!(r.gold_claims.iter().all(|c| c.gold_status == StatusLabel::Omitted));
        }
    }

    #[test]
    fn zero_count_rejected() {
        let (templates, lexicon, stopwords) = fixtures();
        let assets = GeneratorAssets {
            templates: &templates,
            lexicon: &lexicon,
            stopwords: &stopwords,
        };
        let config = GeneratorConfig {
            count: 0,
            ..Default::default()
        };
        assert!(generate_synthetic(&config, 1, &assets).is_err());
    }

    #[test]
    fn questions_classify_back_to_their_intent() {
        let rules = IntentRuleSet::parse(DEFAULT_INTENT_RULES).unwrap();
        for intent in IntentLabel::ENUMERATED {
            let q = question_for(&intent, "relastat", "migraine", "corvamide");
            assert_eq!(
                classify_intent(&q, &rules).unwrap(),
                intent,
                "question template for {intent:?}: {q}"
            );
        }
    }

    #[test]
    fn gold_actions_consistent_with_statuses() {
        let (templates, lexicon, stopwords) = fixtures();
        let assets = GeneratorAssets {
            templates: &templates,
            lexicon: &lexicon,
            stopwords: &stopwords,
        };
        let config = GeneratorConfig {
            count: 200,
            ..Default::default()
        };
        let corpus = generate_synthetic(&config, 11, &assets).unwrap();
        let mut seen_actions = std::collections::BTreeSet::new();
        for r in &corpus {
            seen_actions.insert(r.gold_action);
            match r.gold_action {
                ActionLabel::Full => assert!(r
                    .gold_claims
                    .iter()
                    .all(|c| c.gold_status == StatusLabel::Certified)),
                ActionLabel::Conflict => assert!(r
                    .gold_claims
                    .iter()
                    .all(|c| c.gold_status == StatusLabel::Conflicting)),
                ActionLabel::Abstain => assert!(r
                    .gold_claims
                    .iter()
                    .all(|c| c.gold_status == StatusLabel::Omitted)),
                ActionLabel::Partial => {
                    assert!(r
                        .gold_claims
                        .iter()
                        .any(|c| c.critical && c.gold_status == StatusLabel::ConditionLimited));
                    assert!(r.gold_claims.iter().all(|c| c.gold_status.is_expressed()));
                }
            }
            if r.gold_action == ActionLabel::Full {
                assert_ne!(
                    r.source_type,
                    SourceLabel::PubmedLiterature,
                    "full gold actions avoid the downgrade source"
                );
            }
        }
        assert_eq!(seen_actions.len(), 4, "default mix covers all actions");
    }
}
