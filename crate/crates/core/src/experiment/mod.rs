//! Replicated experiments: configuration, per-replication seeding, parallel
//! execution, persisted records and summary tables.

mod config;
mod runner;
mod seeds;
mod summary;

pub use config::{parse_methods, parse_mu_list, parse_range, DatasetSelector, ExperimentConfig, Method, SplitFractions};
pub use runner::{
    config_hash, execute, export_synthetic_instance, records_to_jsonl, run_experiment, run_robustness_sweep, sweep_rows, synthetic_instance,
    ExperimentOutcome, Failure, RunRecord, SweepRow,
};
pub use seeds::{child_seed, content_hash, retry_seed};
pub use summary::{read_records, summarize, summarize_records, Summary, SummaryRow, SUMMARY_METRICS};
