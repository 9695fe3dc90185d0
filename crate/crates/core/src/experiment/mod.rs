//! Declarative experiment runner and its CSV/JSON report.

mod config;
mod growth;
mod report;
mod runner;
pub mod stats;

pub use config::{Algorithm, ExperimentConfig, ModelSpec, STATISTIC_IDS};
pub use growth::{compare_variance_growth, GrowthDiagnostics, KGrowth, RatioSeries, VarianceSeries, MIN_REPLICATES};
pub use report::{
    aggregate_rows, backward_log_name, parse_backward_log_name, read_backward_log, read_backward_logs,
    read_estimates, variance_series_from_rows, write_backward_log, write_support_csv, AggregateRow,
    BackwardLogRecord, EstimateRow, ExperimentReport, FinalSummary, ReplicateFailure, StepTrials,
    SupportRecord, TrialRecord,
};
pub use runner::{config_hash, run_experiment, statistic_functional};
