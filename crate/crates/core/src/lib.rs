//! Coverage-driven stimulus generation: behavioral DUT models with exact
//! coverage plans, stimulus agents (constrained-random and LLM-driven), the
//! coverage-feedback prompt machinery and a fixed-token-budget runtime.

pub mod agents;
pub mod backend;
pub mod coverage;
pub mod cpu;
pub mod decoder;
pub mod dut;
pub mod error;
pub mod isa;
pub mod prompting;
pub mod runtime;
pub mod stride;

pub use coverage::{coverage_rate, BinDescriptor, BinGroup, BinIndex, CoveragePlan, CoverageState, Difficulty};
pub use dut::{make_dut, plan_for, Dut, DutKind, Stimulus, StimulusRejected, TaskProfile, WireFormat};
pub use error::{Error, Result};
pub use agents::{crt_next, extract_stimuli, CrtAgent, ExtractionResult, LlmAgent};
pub use backend::{BackendConfig, ChatBackend, ChatMessage, Completion, HttpBackend, ReplayBackend, Role};
pub use prompting::StrategyConfig;
pub use runtime::{run_baseline, run_experiment, run_experiment_on, run_trial, ExperimentConfig, ExperimentReport, TrialRecord, TrialStatus};
