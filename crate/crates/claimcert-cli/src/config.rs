//! Pipeline configuration loading.
//!
//! A pipeline config file is a TOML table of optional path overrides for
//! the shipped data files plus scalar scoring parameters. Relative paths
//! resolve against the config file's directory. Without `--config`, the
//! `CLAIMCERT_CONFIG_DIR` environment variable may name a directory
//! containing `pipeline.toml`; otherwise the embedded defaults apply.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use claimcert::decompose::{IntentRuleSet, TemplateSet};
use claimcert::error::{Error, Result};
use claimcert::pipeline::PipelineAssets;
use claimcert::relation::CueLexicon;
use claimcert::selector::{PolicyConfig, ThresholdConfig};
use claimcert::text::parse_stopwords;
use serde::Deserialize;

pub const CONFIG_DIR_ENV: &str = "CLAIMCERT_CONFIG_DIR";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PipelineConfigFile {
    lexicon: Option<String>,
    intent_rules: Option<String>,
    templates: Option<String>,
    stopwords: Option<String>,
    thresholds: Option<String>,
    policy: Option<String>,
    answer_gate: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    rescue_floor: Option<f64>,
}

/// Assets plus the effective text of every configuration input, kept for
/// manifest hashing.
pub struct LoadedAssets {
    pub assets: PipelineAssets,
    pub sources: BTreeMap<String, String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Load assets from an optional config path, falling back to the config
/// directory environment variable and then to the embedded defaults.
pub fn load_assets(config: Option<&Path>) -> Result<LoadedAssets> {
    let config_path: Option<PathBuf> = match config {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(CONFIG_DIR_ENV).and_then(|dir| {
            let candidate = Path::new(&dir).join("pipeline.toml");
            candidate.exists().then_some(candidate)
        }),
    };

    let mut assets = PipelineAssets::embedded();
    let mut sources: BTreeMap<String, String> = BTreeMap::new();
    sources.insert(
        "intent_rules".into(),
        claimcert::decompose::DEFAULT_INTENT_RULES.to_string(),
    );
    sources.insert(
        "templates".into(),
        claimcert::decompose::DEFAULT_TEMPLATES.to_string(),
    );
    sources.insert(
        "stopwords".into(),
        claimcert::decompose::DEFAULT_STOPWORDS.to_string(),
    );
    sources.insert(
        "lexicon".into(),
        claimcert::relation::DEFAULT_CUE_LEXICON.to_string(),
    );
    sources.insert(
        "thresholds".into(),
        claimcert::selector::DEFAULT_THRESHOLDS.to_string(),
    );
    sources.insert(
        "policy".into(),
        claimcert::selector::DEFAULT_POLICY.to_string(),
    );

    let Some(config_path) = config_path else {
        return Ok(LoadedAssets { assets, sources });
    };

    let text = read(&config_path)?;
    sources.insert("pipeline".into(), text.clone());
    let file: PipelineConfigFile =
        toml::from_str(&text).map_err(|e| Error::Config(format!("pipeline config: {e}")))?;
    let base = config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    if let Some(path) = &file.intent_rules {
        let contents = read(&resolve(&base, path))?;
        assets.rules = IntentRuleSet::parse(&contents)?;
        sources.insert("intent_rules".into(), contents);
    }
    if let Some(path) = &file.templates {
        let contents = read(&resolve(&base, path))?;
        assets.templates = TemplateSet::parse(&contents)?;
        sources.insert("templates".into(), contents);
    }
    if let Some(path) = &file.stopwords {
        let contents = read(&resolve(&base, path))?;
        assets.params.stopwords = parse_stopwords(&contents);
        sources.insert("stopwords".into(), contents);
    }
    if let Some(path) = &file.lexicon {
        let contents = read(&resolve(&base, path))?;
        assets.lexicon = CueLexicon::parse(&contents)?;
        sources.insert("lexicon".into(), contents);
    }
    if let Some(path) = &file.thresholds {
        let contents = read(&resolve(&base, path))?;
        assets.thresholds = ThresholdConfig::parse(&contents)?;
        sources.insert("thresholds".into(), contents);
    }
    if let Some(path) = &file.policy {
        let contents = read(&resolve(&base, path))?;
        assets.policy = PolicyConfig::parse(&contents)?;
        sources.insert("policy".into(), contents);
    }
    if let Some(gate) = file.answer_gate {
        if !(0.0..=1.0).contains(&gate) {
            return Err(Error::Config(format!("answer_gate={gate} outside [0,1]")));
        }
        assets.answer_gate = gate;
    }
    if let Some(alpha) = file.alpha {
        assets.params.alpha = alpha;
    }
    if let Some(beta) = file.beta {
        assets.params.beta = beta;
    }
    if let Some(floor) = file.rescue_floor {
        if !(0.0..=1.0).contains(&floor) {
            return Err(Error::Config(format!("rescue_floor={floor} outside [0,1]")));
        }
        assets.params.rescue_floor = floor;
    }
    Ok(LoadedAssets { assets, sources })
}
