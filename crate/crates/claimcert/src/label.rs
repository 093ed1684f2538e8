//! Closed label enumerations shared across the pipeline.
//!
//! Every label serializes to the exact lowercase string used by the JSONL
//! corpus format. `IntentLabel` carries an `other:<tag>` escape hatch;
//! everything else is a closed set.

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Response-level action. The declaration order is the fixed tie-break
/// order used by majority controls and tuners (full < partial < conflict < abstain).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionLabel {
    Full,
    Partial,
    Conflict,
    Abstain,
}

impl ActionLabel {
    pub const ALL: [ActionLabel; 4] = [
        ActionLabel::Full,
        ActionLabel::Partial,
        ActionLabel::Conflict,
        ActionLabel::Abstain,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionLabel::Full => "full",
            ActionLabel::Partial => "partial",
            ActionLabel::Conflict => "conflict",
            ActionLabel::Abstain => "abstain",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ActionLabel::Full),
            "partial" => Ok(ActionLabel::Partial),
            "conflict" => Ok(ActionLabel::Conflict),
            "abstain" => Ok(ActionLabel::Abstain),
            other => Err(Error::Validation(format!("unknown action label '{other}'"))),
        }
    }
}

/// Per-claim certificate status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StatusLabel {
    Certified,
    ConditionLimited,
    Conflicting,
    Omitted,
}

impl StatusLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StatusLabel::Certified => "certified",
            StatusLabel::ConditionLimited => "condition_limited",
            StatusLabel::Conflicting => "conflicting",
            StatusLabel::Omitted => "omitted",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "certified" => Ok(StatusLabel::Certified),
            "condition_limited" => Ok(StatusLabel::ConditionLimited),
            "conflicting" => Ok(StatusLabel::Conflicting),
            "omitted" => Ok(StatusLabel::Omitted),
            other => Err(Error::Validation(format!("unknown claim status '{other}'"))),
        }
    }

    /// Statuses that may be expressed with evidence links.
    pub fn is_expressed(self) -> bool {
        matches!(self, StatusLabel::Certified | StatusLabel::ConditionLimited)
    }
}

/// Evidence/record provenance family. Unknown inputs map to `Other` at
/// ingestion time rather than erroring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SourceLabel {
    Openfda,
    FdaFaers,
    PubmedLiterature,
    Pubmedqa,
    Synthetic,
    Other,
}

impl SourceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceLabel::Openfda => "openfda",
            SourceLabel::FdaFaers => "fda_faers",
            SourceLabel::PubmedLiterature => "pubmed_literature",
            SourceLabel::Pubmedqa => "pubmedqa",
            SourceLabel::Synthetic => "synthetic",
            SourceLabel::Other => "other",
        }
    }

    /// Lenient parse: anything outside the enumerated set becomes `Other`.
    pub fn parse_lenient(s: &str) -> Self {
        match s {
            "openfda" => SourceLabel::Openfda,
            "fda_faers" => SourceLabel::FdaFaers,
            "pubmed_literature" => SourceLabel::PubmedLiterature,
            "pubmedqa" => SourceLabel::Pubmedqa,
            "synthetic" => SourceLabel::Synthetic,
            _ => SourceLabel::Other,
        }
    }
}

/// Claim-type slice vocabulary. Aligned with the intent inventory so
/// template claim types and diagnostic slices share one namespace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClaimTypeLabel {
    Indication,
    Pregnancy,
    Lactation,
    Interaction,
    Contraindication,
    Dosage,
    DosageAdjustment,
    MissedDose,
    Monitoring,
    SpecialPopulation,
    ResearchQuestion,
}

impl ClaimTypeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClaimTypeLabel::Indication => "indication",
            ClaimTypeLabel::Pregnancy => "pregnancy",
            ClaimTypeLabel::Lactation => "lactation",
            ClaimTypeLabel::Interaction => "interaction",
            ClaimTypeLabel::Contraindication => "contraindication",
            ClaimTypeLabel::Dosage => "dosage",
            ClaimTypeLabel::DosageAdjustment => "dosage_adjustment",
            ClaimTypeLabel::MissedDose => "missed_dose",
            ClaimTypeLabel::Monitoring => "monitoring",
            ClaimTypeLabel::SpecialPopulation => "special_population",
            ClaimTypeLabel::ResearchQuestion => "research_question",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "indication" => Ok(ClaimTypeLabel::Indication),
            "pregnancy" => Ok(ClaimTypeLabel::Pregnancy),
            "lactation" => Ok(ClaimTypeLabel::Lactation),
            "interaction" => Ok(ClaimTypeLabel::Interaction),
            "contraindication" => Ok(ClaimTypeLabel::Contraindication),
            "dosage" => Ok(ClaimTypeLabel::Dosage),
            "dosage_adjustment" => Ok(ClaimTypeLabel::DosageAdjustment),
            "missed_dose" => Ok(ClaimTypeLabel::MissedDose),
            "monitoring" => Ok(ClaimTypeLabel::Monitoring),
            "special_population" => Ok(ClaimTypeLabel::SpecialPopulation),
            "research_question" => Ok(ClaimTypeLabel::ResearchQuestion),
            other => Err(Error::Validation(format!("unknown claim type '{other}'"))),
        }
    }
}

/// Question intent. Either one of the enumerated categories or the
/// `other:<tag>` escape hatch; bare unknown strings are rejected.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IntentLabel {
    Indication,
    Dosage,
    DosageAdjustment,
    MissedDose,
    Contraindication,
    Interaction,
    Pregnancy,
    Lactation,
    Monitoring,
    SpecialPopulation,
    ResearchQuestion,
    Other(String),
}

impl IntentLabel {
    /// The eleven enumerated intents, in slice/reporting order.
    pub const ENUMERATED: [IntentLabel; 11] = [
        IntentLabel::Indication,
        IntentLabel::Dosage,
        IntentLabel::DosageAdjustment,
        IntentLabel::MissedDose,
        IntentLabel::Contraindication,
        IntentLabel::Interaction,
        IntentLabel::Pregnancy,
        IntentLabel::Lactation,
        IntentLabel::Monitoring,
        IntentLabel::SpecialPopulation,
        IntentLabel::ResearchQuestion,
    ];

    pub fn as_string(&self) -> String {
        match self {
            IntentLabel::Other(tag) => format!("other:{tag}"),
            enumerated => enumerated.enumerated_str().to_string(),
        }
    }

    fn enumerated_str(&self) -> &'static str {
        match self {
            IntentLabel::Indication => "indication",
            IntentLabel::Dosage => "dosage",
            IntentLabel::DosageAdjustment => "dosage_adjustment",
            IntentLabel::MissedDose => "missed_dose",
            IntentLabel::Contraindication => "contraindication",
            IntentLabel::Interaction => "interaction",
            IntentLabel::Pregnancy => "pregnancy",
            IntentLabel::Lactation => "lactation",
            IntentLabel::Monitoring => "monitoring",
            IntentLabel::SpecialPopulation => "special_population",
            IntentLabel::ResearchQuestion => "research_question",
            IntentLabel::Other(_) => unreachable!("other handled by as_string"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "indication" => Ok(IntentLabel::Indication),
            "dosage" => Ok(IntentLabel::Dosage),
            "dosage_adjustment" => Ok(IntentLabel::DosageAdjustment),
            "missed_dose" => Ok(IntentLabel::MissedDose),
            "contraindication" => Ok(IntentLabel::Contraindication),
            "interaction" => Ok(IntentLabel::Interaction),
            "pregnancy" => Ok(IntentLabel::Pregnancy),
            "lactation" => Ok(IntentLabel::Lactation),
            "monitoring" => Ok(IntentLabel::Monitoring),
            "special_population" => Ok(IntentLabel::SpecialPopulation),
            "research_question" => Ok(IntentLabel::ResearchQuestion),
            other => match other.strip_prefix("other:") {
                Some(tag) if !tag.is_empty() => Ok(IntentLabel::Other(tag.to_string())),
                _ => Err(Error::Validation(format!(
                    "unknown intent '{other}' (expected an enumerated intent or 'other:<tag>')"
                ))),
            },
        }
    }
}

/// Collapsed answer/abstain action space used by binary-form baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryAction {
    Answer,
    Abstain,
}

impl BinaryAction {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryAction::Answer => "answer",
            BinaryAction::Abstain => "abstain",
        }
    }
}

macro_rules! string_serde {
    ($ty:ty, $to:expr, $from:expr) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
                #[allow(clippy::redundant_closure_call)]
                ser.serialize_str(&($to)(self))
            }
        }
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(de)?;
                #[allow(clippy::redundant_closure_call)]
                ($from)(&s).map_err(de::Error::custom)
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                #[allow(clippy::redundant_closure_call)]
                f.write_str(&($to)(self))
            }
        }
    };
}

string_serde!(
    ActionLabel,
    |v: &ActionLabel| v.as_str().to_string(),
    |s: &str| ActionLabel::parse(s)
);
string_serde!(
    StatusLabel,
    |v: &StatusLabel| v.as_str().to_string(),
    |s: &str| StatusLabel::parse(s)
);
string_serde!(
    SourceLabel,
    |v: &SourceLabel| v.as_str().to_string(),
    |s: &str| Ok::<_, Error>(SourceLabel::parse_lenient(s))
);
string_serde!(
    ClaimTypeLabel,
    |v: &ClaimTypeLabel| v.as_str().to_string(),
    |s: &str| ClaimTypeLabel::parse(s)
);
string_serde!(
    IntentLabel,
    |v: &IntentLabel| v.as_string(),
    |s: &str| IntentLabel::parse(s)
);
string_serde!(
    BinaryAction,
    |v: &BinaryAction| v.as_str().to_string(),
    |s: &str| match s {
        "answer" => Ok(BinaryAction::Answer),
        "abstain" => Ok(BinaryAction::Abstain),
        other => Err(Error::Validation(format!("unknown binary action '{other}'"))),
    }
);
