//! Fixed-budget experiments: trials back to back until the budget is gone.

use serde::{Deserialize, Serialize};

use super::config::{AgentKind, ExperimentConfig};
use super::log::{LogFooter, LogHeader, LogRecord, LogSink, SCHEMA_VERSION};
use super::metrics::{compute_metrics, Metrics, TrialSummary};
use super::trial::{run_baseline, run_trial, Budget, TrialRecord, TrialStatus, CRT_CHUNK};
use crate::agents::{ExtractOptions, LlmAgent, LlmAgentOptions};
use crate::backend::ChatBackend;
use crate::dut::{make_dut, Dut};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub label: String,
    pub dut: String,
    pub agent: String,
    pub plan_size: usize,
    pub budget_tokens: u64,
    pub seed: u64,
    pub tokens_used: u64,
    pub trials: Vec<TrialSummary>,
    pub metrics: Metrics,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub records: Vec<TrialRecord>,
}

fn emit_trial(sink: &mut dyn LogSink, record: &TrialRecord) -> Result<()> {
    for e in &record.events {
        sink.record(&LogRecord::Event(e.clone()))?;
    }
    sink.record(&LogRecord::TrialEnd(TrialSummary::from(record)))
}

/// Runs an experiment. LLM experiments need a backend; constrained-random
/// ones run a single budget-free trial of `crt_stimuli` stimuli.
pub fn run_experiment(
    config: &ExperimentConfig,
    backend: Option<Box<dyn ChatBackend + Send>>,
    sink: &mut dyn LogSink,
) -> Result<ExperimentOutput> {
    config.validate()?;
    run_experiment_on(make_dut(config.dut)?, config, backend, sink)
}

/// Same as [`run_experiment`] with a caller-supplied DUT in place of the
/// one named by `config.dut`.
pub fn run_experiment_on(
    mut dut: Box<dyn Dut + Send>,
    config: &ExperimentConfig,
    backend: Option<Box<dyn ChatBackend + Send>>,
    sink: &mut dyn LogSink,
) -> Result<ExperimentOutput> {
    config.validate()?;
    let plan = dut.plan().clone();
    let backend = match (config.agent, backend) {
        (AgentKind::Llm, None) => return Err(Error::Config("an LLM experiment needs a backend".into())),
        (_, b) => b,
    };
    sink.record(&LogRecord::Header(LogHeader {
        schema_version: SCHEMA_VERSION,
        label: config.label(),
        dut: config.dut.to_string(),
        agent: config.agent.as_str().to_owned(),
        plan_size: plan.len(),
        budget_tokens: config.budget_tokens,
        seed: config.seed,
        config: serde_json::to_value(config)?,
    }))?;

    let mut records = Vec::new();
    let mut notes = Vec::new();
    let mut budget = Budget::new(config.budget_tokens);
    match (config.agent, backend) {
        (AgentKind::Crt, _) => {
            let record = run_baseline(dut.as_mut(), config.dut, config.crt_stimuli, config.seed, CRT_CHUNK)?;
            emit_trial(sink, &record)?;
            records.push(record);
        }
        (AgentKind::Llm, Some(backend)) => {
            if config.budget_tokens == 0 {
                notes.push("token budget is zero; no trial was run".to_owned());
            }
            let options = LlmAgentOptions {
                extract: ExtractOptions { gibberish_ratio: config.gibberish_ratio },
                regeneration_cap: config.regeneration_cap,
            };
            let mut agent =
                LlmAgent::new(plan.clone(), dut.profile(), config.strategy.clone(), options, backend, config.seed);
            let mut trial = 1;
            while budget.remaining() > 0 {
                if config.max_trials.is_some_and(|m| trial > m) {
                    notes.push(format!("stopped after max_trials = {}", trial - 1));
                    break;
                }
                let record = run_trial(dut.as_mut(), &mut agent, trial, &config.exhaustion, &mut budget)?;
                if record.messages == 0 && record.status == TrialStatus::BudgetExhausted {
                    notes.push(format!(
                        "remaining budget of {} tokens cannot pay for another call",
                        budget.remaining()
                    ));
                    break;
                }
                emit_trial(sink, &record)?;
                let status = record.status;
                if let Some(err) = &record.error {
                    notes.push(format!("trial {trial} aborted: {err}"));
                }
                records.push(record);
                if matches!(status, TrialStatus::BudgetExhausted | TrialStatus::Aborted) {
                    break;
                }
                trial += 1;
            }
        }
        (AgentKind::Llm, None) => unreachable!("checked above"),
    }

    let trials: Vec<TrialSummary> = records.iter().map(TrialSummary::from).collect();
    let metrics = compute_metrics(&trials, plan.len());
    let tokens_used = records.iter().map(TrialRecord::tokens).sum();
    sink.record(&LogRecord::ExperimentEnd(LogFooter {
        tokens_used,
        metrics: metrics.clone(),
        notes: notes.clone(),
    }))?;
    Ok(ExperimentOutput {
        report: ExperimentReport {
            schema_version: SCHEMA_VERSION,
            label: config.label(),
            dut: config.dut.to_string(),
            agent: config.agent.as_str().to_owned(),
            plan_size: plan.len(),
            budget_tokens: config.budget_tokens,
            seed: config.seed,
            tokens_used,
            trials,
            metrics,
            notes,
        },
        records,
    })
}
