//! Trial loop, fixed-budget experiments, metrics, logging and reports.

pub mod config;
pub mod experiment;
pub mod log;
pub mod metrics;
pub mod report;
pub mod trial;

pub use config::{default_exhaustion, exhausted, AgentKind, ExhaustionWindow, ExperimentConfig};
pub use experiment::{run_experiment, run_experiment_on, ExperimentOutput, ExperimentReport};
pub use log::{read_log, verify_log, verify_log_file, JsonlLog, LogRecord, LogSink, NullSink, SCHEMA_VERSION};
pub use metrics::{compute_metrics, sample_stdev, Metrics, TrialSummary};
pub use report::{row, to_csv, to_text_table, COLUMNS};
pub use trial::{run_baseline, run_trial, Budget, ResponseEvent, TrialRecord, TrialStatus, CRT_CHUNK};
