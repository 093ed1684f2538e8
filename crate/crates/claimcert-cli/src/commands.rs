//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use claimcert::corpus::synth::{generate_synthetic, GeneratorAssets, GeneratorConfig};
use claimcert::corpus::{
    audit_overlap, derive_source_evidence_novel, derive_source_missing, load_corpus, Corpus,
};
use claimcert::error::{Error, Result};
use claimcert::metrics::{compute_report, render_table, slice_report, MetricOptions, MetricReport, SliceKey};
use claimcert::pipeline::{predictions_to_jsonl, run_policy, PipelineAssets, RunPolicy};
use claimcert::selector::ThresholdConfig;
use claimcert::selector::Prediction;
use claimcert::stats::{
    bootstrap_metric, cohens_kappa, paired_bootstrap_metric, AgreementMatrix, BootstrapResult,
    MetricKind, DEFAULT_AGREEMENT_MATRIX,
};
use claimcert::tuning::{
    candidates_tsv, default_gate_grid, gates_tsv, grid_tune_thresholds, risk_coverage_sweep,
    risk_coverage_tsv, sensitivity_sweep, sweep_tsv, tune_answer_gate, SweepSelector, SweepTarget,
    ThresholdGrids,
};

use crate::config::LoadedAssets;
use crate::manifest::RunManifest;

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn path(&self) -> &Path {
        &self.0
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.0.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(path, e))
    }

    pub fn subdir(&self, name: &str) -> Result<OutDir> {
        OutDir::create(&self.0.join(name))
    }
}

/// Expression semantics notes recorded in manifests for the baseline rows.
fn policy_note(policy: &RunPolicy) -> Option<&'static str> {
    match policy {
        RunPolicy::RetrievalOnly => Some(
            "expresses every claim skeleton as certified with no scoring; never abstains",
        ),
        RunPolicy::RelationOnly => Some(
            "expresses claims with pooled support > 0; expresses all skeletons when the evidence pool is empty; never abstains",
        ),
        RunPolicy::BinaryProxy => Some(
            "answers iff any claim's pooled support clears the answer gate; actions are lifted binary actions (answer -> full)",
        ),
        RunPolicy::Majority(_) => Some(
            "metadata-only action control; produces no claim decisions, certificate metrics not applicable",
        ),
        _ => None,
    }
}

pub struct RunArgs {
    pub corpus: PathBuf,
    pub train: Option<PathBuf>,
    pub policy: Option<String>,
    pub preset: Option<String>,
    pub seed: u64,
    pub out: PathBuf,
    pub slices: Vec<String>,
    /// Bootstrap resamples for metric intervals; 0 disables them.
    pub resamples: usize,
}

const INTERVAL_METRICS: [MetricKind; 5] = [
    MetricKind::Uccr,
    MetricKind::Pau,
    MetricKind::PauPrecision,
    MetricKind::F1,
    MetricKind::ActionAccuracy,
];

/// Sample-level bootstrap intervals for every defined metric of a run.
fn bootstrap_intervals(
    preds: &[Prediction],
    gold: &Corpus,
    resamples: usize,
    seed: u64,
) -> BTreeMap<String, BootstrapResult> {
    let options = MetricOptions::default();
    let action_only = preds.iter().all(|p| p.decisions.is_empty());
    let mut out = BTreeMap::new();
    for kind in INTERVAL_METRICS {
        // Certificate metrics never get intervals on action-only runs, and
        // metrics undefined on the full sample are absent from the table.
        if action_only && kind != MetricKind::ActionAccuracy {
            continue;
        }
        if let Ok(result) = bootstrap_metric(kind, preds, gold, &options, resamples, seed) {
            out.insert(kind.as_str().to_string(), result);
        }
    }
    out
}

fn preset_policies(preset: &str) -> Result<Vec<RunPolicy>> {
    let names: Vec<&str> = match preset {
        "ablation" => vec![
            "retrieval_only",
            "relation_only",
            "threshold_only",
            "intent_aware",
        ],
        "baselines" => vec!["binary_proxy", "threshold_only", "intent_aware"],
        "controls" => vec![
            "perturbed:drop_intent",
            "majority:intent",
            "majority:source_type,intent",
            "majority:source_type,claim_type",
            "perturbed:shuffle_evidence",
            "perturbed:shuffle_intent",
            "intent_aware",
        ],
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (expected ablation, baselines, or controls)"
            )))
        }
    };
    names.iter().map(|n| RunPolicy::parse(n)).collect()
}

#[derive(serde::Serialize)]
struct MetricsFile<'a> {
    #[serde(flatten)]
    report: &'a MetricReport,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    intervals: BTreeMap<String, BootstrapResult>,
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    corpus: &Corpus,
    train: Option<&Corpus>,
    policy: &RunPolicy,
    assets: &PipelineAssets,
    seed: u64,
    slices: &[SliceKey],
    resamples: usize,
    dir: &OutDir,
    loaded_sources: &BTreeMap<String, String>,
    corpus_paths: &[&Path],
) -> Result<(MetricReport, Vec<Prediction>)> {
    let preds = run_policy(corpus, train, policy, assets, seed)?;
    let options = MetricOptions::default();
    let mut report = compute_report(&preds, corpus, &options)?;
    if !slices.is_empty() {
        let mut all = BTreeMap::new();
        for key in slices {
            for (value, slice) in slice_report(&preds, corpus, *key, &options)? {
                all.insert(
                    format!(
                        "{}:{}",
                        match key {
                            SliceKey::SourceType => "source_type",
                            SliceKey::ClaimType => "claim_type",
                            SliceKey::Intent => "intent",
                        },
                        value
                    ),
                    slice,
                );
            }
        }
        report.slices = Some(all);
    }
    let intervals = if resamples > 0 {
        bootstrap_intervals(&preds, corpus, resamples, seed)
    } else {
        BTreeMap::new()
    };
    dir.write("predictions.jsonl", &predictions_to_jsonl(&preds))?;
    let metrics_file = MetricsFile {
        report: &report,
        intervals,
    };
    dir.write(
        "metrics.json",
        &(serde_json::to_string_pretty(&metrics_file).expect("metrics serialization") + "\n"),
    )?;
    let mut manifest = RunManifest::new(seed);
    manifest.hash_configs(loaded_sources);
    for path in corpus_paths {
        manifest.hash_corpus_file(path)?;
    }
    manifest.note("policy", policy.name());
    if let Some(note) = policy_note(policy) {
        manifest.note("policy_semantics", note);
    }
    manifest.write(dir.path())?;
    Ok((report, preds))
}

pub fn cmd_run(args: &RunArgs, loaded: &LoadedAssets) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let train = args.train.as_deref().map(load_corpus).transpose()?;
    let slices: Vec<SliceKey> = args
        .slices
        .iter()
        .map(|s| SliceKey::parse(s))
        .collect::<Result<_>>()?;
    let out = OutDir::create(&args.out)?;
    let mut corpus_paths: Vec<&Path> = vec![&args.corpus];
    if let Some(train_path) = &args.train {
        corpus_paths.push(train_path);
    }

    match (&args.policy, &args.preset) {
        (Some(policy), None) => {
            let policy = RunPolicy::parse(policy)?;
            let (report, _) = run_one(
                &corpus,
                train.as_ref(),
                &policy,
                &loaded.assets,
                args.seed,
                &slices,
                args.resamples,
                &out,
                &loaded.sources,
                &corpus_paths,
            )?;
            print!("{}", render_table(&[(policy.name(), report)]));
            Ok(())
        }
        (None, Some(preset)) => {
            let policies = preset_policies(preset)?;
            let mut rows = Vec::new();
            let mut kept: BTreeMap<String, Vec<Prediction>> = BTreeMap::new();
            for policy in &policies {
                let dir = out.subdir(&policy.name().replace([':', ','], "_"))?;
                let (report, preds) = run_one(
                    &corpus,
                    train.as_ref(),
                    policy,
                    &loaded.assets,
                    args.seed,
                    &slices,
                    args.resamples,
                    &dir,
                    &loaded.sources,
                    &corpus_paths,
                )?;
                kept.insert(policy.name(), preds);
                rows.push((policy.name(), report));
            }
            let table = render_table(&rows);
            out.write(&format!("{preset}.tsv"), &preset_table_tsv(&rows))?;
            // Paired deltas localize the intent-aware gain over the
            // threshold-only selector on shared resamples.
            if args.resamples > 0 {
                if let (Some(intent), Some(threshold)) =
                    (kept.get("intent_aware"), kept.get("threshold_only"))
                {
                    let options = MetricOptions::default();
                    let mut deltas: BTreeMap<String, BootstrapResult> = BTreeMap::new();
                    for kind in [MetricKind::Pau, MetricKind::F1, MetricKind::ActionAccuracy] {
                        if let Ok(delta) = paired_bootstrap_metric(
                            kind,
                            intent,
                            threshold,
                            &corpus,
                            &options,
                            args.resamples,
                            args.seed,
                        ) {
                            deltas.insert(kind.as_str().to_string(), delta);
                        }
                    }
                    out.write(
                        "deltas.json",
                        &(serde_json::to_string_pretty(&deltas).expect("delta serialization")
                            + "\n"),
                    )?;
                }
            }
            let mut manifest = RunManifest::new(args.seed);
            manifest.hash_configs(&loaded.sources);
            for path in &corpus_paths {
                manifest.hash_corpus_file(path)?;
            }
            manifest.note("preset", preset);
            manifest.write(out.path())?;
            print!("{table}");
            Ok(())
        }
        _ => Err(Error::Config(
            "exactly one of --policy or --preset is required".into(),
        )),
    }
}

fn preset_table_tsv(rows: &[(String, MetricReport)]) -> String {
    let mut out = String::from("configuration\tuccr\tpau\tpau_precision\tf1\taction_accuracy\tn\n");
    for (name, r) in rows {
        out.push_str(&format!(
            "{name}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.uccr, r.pau, r.pau_precision, r.f1, r.action_accuracy, r.counts.n_records
        ));
    }
    out
}

pub struct TuneArgs {
    pub corpus: PathBuf,
    pub mode: String,
    pub grid: Vec<String>,
    pub seed: u64,
    pub out: PathBuf,
}

fn parse_grid_spec(spec: &str) -> Result<(String, Vec<f64>)> {
    let (name, range) = spec.split_once('=').ok_or_else(|| {
        Error::Config(format!("grid spec '{spec}' must be name=start:end:step"))
    })?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "grid spec '{spec}' must be name=start:end:step"
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("bad grid number '{s}' in '{spec}'")))
    };
    let (start, end, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if step <= 0.0 || end < start {
        return Err(Error::Config(format!("grid spec '{spec}' is not increasing")));
    }
    let mut values = Vec::new();
    let mut v = start;
    while v <= end + 1e-9 {
        values.push((v * 1000.0).round() / 1000.0);
        v += step;
    }
    Ok((name.to_string(), values))
}

pub fn cmd_tune(args: &TuneArgs, loaded: &LoadedAssets) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let out = OutDir::create(&args.out)?;
    let options = MetricOptions::default();
    let mut grids: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for spec in &args.grid {
        let (name, values) = parse_grid_spec(spec)?;
        grids.insert(name, values);
    }

    match args.mode.as_str() {
        "thresholds" => {
            let mut threshold_grids = ThresholdGrids::default();
            if let Some(v) = grids.remove("support") {
                threshold_grids.support = v;
            }
            if let Some(v) = grids.remove("conflict") {
                threshold_grids.conflict = v;
            }
            if let Some(v) = grids.remove("condition_limited") {
                threshold_grids.condition_limited = v;
            }
            if let Some(stray) = grids.keys().next() {
                return Err(Error::Config(format!("unknown grid dimension '{stray}'")));
            }
            let (chosen, candidates) =
                grid_tune_thresholds(&corpus, &loaded.assets, &threshold_grids, &options)?;
            out.write("candidates.tsv", &candidates_tsv(&candidates))?;
            out.write("chosen.toml", &threshold_toml(&chosen))?;
            let mut manifest = RunManifest::new(args.seed);
            manifest.hash_configs(&loaded.sources);
            manifest.hash_corpus_file(&args.corpus)?;
            manifest.note("mode", "thresholds");
            manifest.write(out.path())?;
            println!(
                "chosen thresholds: support={:.2} conflict={:.2} condition_limited={:.2} limitation={:.2}",
                chosen.support, chosen.conflict, chosen.condition_limited, chosen.limitation
            );
            Ok(())
        }
        "answer_gate" => {
            let gate_grid = grids
                .remove("gate")
                .unwrap_or_else(default_gate_grid);
            if let Some(stray) = grids.keys().next() {
                return Err(Error::Config(format!("unknown grid dimension '{stray}'")));
            }
            let (gate, candidates) =
                tune_answer_gate(&corpus, &loaded.assets, &gate_grid, &options)?;
            out.write("candidates.tsv", &gates_tsv(&candidates))?;
            out.write("chosen.toml", &format!("answer_gate = {gate}\n"))?;
            let mut manifest = RunManifest::new(args.seed);
            manifest.hash_configs(&loaded.sources);
            manifest.hash_corpus_file(&args.corpus)?;
            manifest.note("mode", "answer_gate");
            manifest.write(out.path())?;
            println!("chosen answer gate: {gate}");
            Ok(())
        }
        other => Err(Error::Config(format!(
            "unknown tune mode '{other}' (expected thresholds or answer_gate)"
        ))),
    }
}

fn threshold_toml(t: &ThresholdConfig) -> String {
    format!(
        "support = {}\nconflict = {}\ncondition_limited = {}\nlimitation = {}\n",
        t.support, t.conflict, t.condition_limited, t.limitation
    )
}

pub struct AuditArgs {
    pub train: Option<PathBuf>,
    pub corpus: PathBuf,
    pub audits: Vec<String>,
    pub kappa_matrix: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn cmd_audit(args: &AuditArgs, loaded: &LoadedAssets) -> Result<()> {
    const KNOWN: [&str; 6] = [
        "overlap",
        "novel_slice",
        "source_missing",
        "sensitivity",
        "risk_coverage",
        "kappa",
    ];
    for audit in &args.audits {
        if !KNOWN.contains(&audit.as_str()) {
            return Err(Error::Validation(format!(
                "unknown audit '{audit}' (expected any of {})",
                KNOWN.join(", ")
            )));
        }
    }
    if args.audits.is_empty() {
        return Err(Error::Validation("no audits requested".into()));
    }

    let eval = load_corpus(&args.corpus)?;
    let train = args.train.as_deref().map(load_corpus).transpose()?;
    let out = OutDir::create(&args.out)?;
    let options = MetricOptions::default();

    let needs_train = |name: &str| -> Result<&Corpus> {
        train.as_ref().ok_or_else(|| {
            Error::Validation(format!("audit '{name}' requires --train"))
        })
    };

    for audit in &args.audits {
        match audit.as_str() {
            "overlap" => {
                let reports = audit_overlap(needs_train("overlap")?, &eval)?;
                let mut tsv = String::from("key\tn_eval\tn_overlapping\trate\n");
                for r in &reports {
                    tsv.push_str(&format!(
                        "{}\t{}\t{}\t{:.6}\n",
                        r.key.as_str(),
                        r.n_eval,
                        r.n_overlapping,
                        r.rate
                    ));
                }
                out.write("overlap.tsv", &tsv)?;
            }
            "novel_slice" => {
                let novel = derive_source_evidence_novel(needs_train("novel_slice")?, &eval);
                out.write("novel.jsonl", &novel.to_jsonl())?;
                out.write(
                    "novel_report.json",
                    &format!(
                        "{{\n  \"n_eval\": {},\n  \"n_novel\": {}\n}}\n",
                        eval.len(),
                        novel.len()
                    ),
                )?;
            }
            "source_missing" => {
                let derived = derive_source_missing(&eval);
                out.write("source_missing.jsonl", &derived.to_jsonl())?;
            }
            "sensitivity" => {
                let threshold_sweep = sensitivity_sweep(
                    &eval,
                    &loaded.assets,
                    SweepSelector::ThresholdOnly,
                    SweepTarget::Thresholds,
                    &options,
                )?;
                out.write(
                    "sensitivity_thresholds_threshold_only.tsv",
                    &sweep_tsv(&threshold_sweep),
                )?;
                let fallback_sweep = sensitivity_sweep(
                    &eval,
                    &loaded.assets,
                    SweepSelector::IntentAware,
                    SweepTarget::Thresholds,
                    &options,
                )?;
                out.write(
                    "sensitivity_thresholds_intent_aware.tsv",
                    &sweep_tsv(&fallback_sweep),
                )?;
                let branch_sweep = sensitivity_sweep(
                    &eval,
                    &loaded.assets,
                    SweepSelector::IntentAware,
                    SweepTarget::BranchInputs,
                    &options,
                )?;
                out.write("sensitivity_branches.tsv", &sweep_tsv(&branch_sweep))?;
            }
            "risk_coverage" => {
                let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
                let points = risk_coverage_sweep(
                    &eval,
                    &loaded.assets,
                    &loaded.assets.thresholds,
                    &grid,
                )?;
                out.write("sweep.tsv", &risk_coverage_tsv(&points))?;
            }
            "kappa" => {
                let matrix = match &args.kappa_matrix {
                    Some(path) => {
                        let text =
                            fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                        AgreementMatrix::parse_tsv(&text)?
                    }
                    None => AgreementMatrix::parse_tsv(DEFAULT_AGREEMENT_MATRIX)?,
                };
                let (agreement, kappa) = cohens_kappa(&matrix)?;
                let kappa_text = kappa
                    .map(|k| format!("{k:.6}"))
                    .unwrap_or_else(|| "null".to_string());
                out.write(
                    "kappa.json",
                    &format!(
                        "{{\n  \"total\": {},\n  \"agreement\": {:.6},\n  \"kappa\": {}\n}}\n",
                        matrix.total(),
                        agreement,
                        kappa_text
                    ),
                )?;
                println!("agreement {agreement:.4} kappa {kappa_text}");
            }
            _ => unreachable!("validated above"),
        }
    }

    let mut manifest = RunManifest::new(args.seed);
    manifest.hash_configs(&loaded.sources);
    manifest.hash_corpus_file(&args.corpus)?;
    if let Some(train_path) = &args.train {
        manifest.hash_corpus_file(train_path)?;
    }
    manifest.note("audits", args.audits.join(","));
    manifest.write(out.path())?;
    Ok(())
}

pub struct GenerateArgs {
    pub config: Option<PathBuf>,
    pub count: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn cmd_generate(args: &GenerateArgs, loaded: &LoadedAssets) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            GeneratorConfig::parse(&text)?
        }
        None => GeneratorConfig::default(),
    };
    if let Some(count) = args.count {
        config.count = count;
    }
    let assets = &loaded.assets;
    let corpus = generate_synthetic(
        &config,
        args.seed,
        &GeneratorAssets {
            templates: &assets.templates,
            lexicon: &assets.lexicon,
            stopwords: &assets.params.stopwords,
        },
    )?;
    let out = OutDir::create(&args.out)?;
    out.write("corpus.jsonl", &corpus.to_jsonl())?;
    let mut manifest = RunManifest::new(args.seed);
    manifest.hash_configs(&loaded.sources);
    manifest.note("records", corpus.len().to_string());
    manifest.write(out.path())?;
    println!("generated {} records", corpus.len());
    Ok(())
}
