//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 on validation/IO errors, 2 when a tuning
//! run cannot satisfy its feasibility constraint.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use claimcert::error::Error;

use commands::{AuditArgs, GenerateArgs, RunArgs, TuneArgs};

#[derive(Parser)]
#[command(
    name = "claimcert",
    version,
    about = "Claim-selective certification engine and evaluation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonConfig {
    /// Pipeline config file (TOML path overrides; defaults to
    /// $CLAIMCERT_CONFIG_DIR/pipeline.toml, then the embedded data files).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic corpus.
    Generate {
        #[command(flatten)]
        common: CommonConfig,
        /// Generator config file (TOML). Embedded defaults when omitted.
        #[arg(long = "generator-config")]
        generator_config: Option<PathBuf>,
        /// Record count override.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a policy (or a preset of policies) over a corpus and report.
    Run {
        #[command(flatten)]
        common: CommonConfig,
        /// Evaluation corpus (JSONL).
        #[arg(long)]
        corpus: PathBuf,
        /// Training corpus for majority controls.
        #[arg(long)]
        train: Option<PathBuf>,
        /// One of: retrieval_only, relation_only, threshold_only,
        /// intent_aware, binary_proxy, majority:<keys>, perturbed:<mode>.
        #[arg(long)]
        policy: Option<String>,
        /// One of: ablation, baselines, controls.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Slice keys for per-slice reports (source_type, claim_type, intent).
        #[arg(long, value_delimiter = ',')]
        slices: Vec<String>,
        /// Bootstrap resamples for 95% metric intervals (0 disables).
        #[arg(long, default_value_t = 0)]
        resamples: usize,
    },
    /// Tune selector gates on a dev corpus.
    Tune {
        #[command(flatten)]
        common: CommonConfig,
        /// Dev corpus (JSONL).
        #[arg(long)]
        corpus: PathBuf,
        /// thresholds or answer_gate.
        #[arg(long)]
        mode: String,
        /// Grid overrides, repeatable: name=start:end:step
        /// (support/conflict/condition_limited for thresholds; gate for
        /// answer_gate).
        #[arg(long)]
        grid: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run protocol audits over corpora.
    Audit {
        #[command(flatten)]
        common: CommonConfig,
        /// Training corpus (required by overlap and novel_slice).
        #[arg(long)]
        train: Option<PathBuf>,
        /// Evaluation corpus (JSONL).
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated subset of: overlap, novel_slice, source_missing,
        /// sensitivity, risk_coverage, kappa.
        #[arg(long, value_delimiter = ',')]
        audits: Vec<String>,
        /// Agreement matrix TSV for the kappa audit (embedded reference
        /// matrix when omitted).
        #[arg(long = "kappa-matrix")]
        kappa_matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> claimcert::Result<()> {
    match cli.command {
        Command::Generate {
            common,
            generator_config,
            count,
            seed,
            out,
        } => {
            let loaded = config::load_assets(common.config.as_deref())?;
            commands::cmd_generate(
                &GenerateArgs {
                    config: generator_config,
                    count,
                    seed,
                    out,
                },
                &loaded,
            )
        }
        Command::Run {
            common,
            corpus,
            train,
            policy,
            preset,
            seed,
            out,
            slices,
            resamples,
        } => {
            let loaded = config::load_assets(common.config.as_deref())?;
            commands::cmd_run(
                &RunArgs {
                    corpus,
                    train,
                    policy,
                    preset,
                    seed,
                    out,
                    slices,
                    resamples,
                },
                &loaded,
            )
        }
        Command::Tune {
            common,
            corpus,
            mode,
            grid,
            seed,
            out,
        } => {
            let loaded = config::load_assets(common.config.as_deref())?;
            commands::cmd_tune(
                &TuneArgs {
                    corpus,
                    mode,
                    grid,
                    seed,
                    out,
                },
                &loaded,
            )
        }
        Command::Audit {
            common,
            train,
            corpus,
            audits,
            kappa_matrix,
            seed,
            out,
        } => {
            let loaded = config::load_assets(common.config.as_deref())?;
            commands::cmd_audit(
                &AuditArgs {
                    train,
                    corpus,
                    audits,
                    kappa_matrix,
                    seed,
                    out,
                },
                &loaded,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version print and succeed; anything else is a usage
            // error reported on the validation exit code.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Infeasible(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
