//! Claim-selective certification engine and evaluation harness for
//! evidence-grounded QA.
//!
//! Questions decompose into verifiable claim skeletons; each claim is
//! scored against retrieved evidence for support, conflict, and limitation;
//! a risk-calibrated selector maps the scores to claim statuses and a
//! response action in {full, partial, conflict, abstain}, emitting an
//! evidence-linked certificate per claim. The crate also carries the full
//! measurement protocol around that pipeline: certificate metrics with
//! sample-scoped claim matching, derived corpora (source-missing
//! counterfactuals, source/evidence-novel holdouts), overlap audits,
//! shortcut and perturbation controls, seeded bootstrap statistics, Wilson
//! bounds, agreement arithmetic, grid tuners, and sensitivity sweeps.
//!
//! Module map:
//! * [`corpus`] — data model, JSONL ingestion, derived corpora, synthesis.
//! * [`decompose`] — intent classification and claim templates.
//! * [`relation`] — cue-lexicon relation scoring and max pooling.
//! * [`selector`] — status selection, action mapping, controls.
//! * [`metrics`] — the certificate metric suite.
//! * [`stats`] — bootstrap, Wilson bounds, Cohen's kappa.
//! * [`tuning`] — grid tuners, risk-coverage and sensitivity sweeps.
//! * [`pipeline`] — end-to-end orchestration of the above.

pub mod corpus;
pub mod decompose;
pub mod error;
pub mod label;
pub mod metrics;
pub mod pipeline;
pub mod relation;
pub mod selector;
pub mod stats;
pub mod text;
pub mod tuning;

pub use error::{Error, Result};
