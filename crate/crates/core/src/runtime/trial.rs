//! One trial: drain the stimulus buffer into the DUT, ask the agent for
//! more, stop on full coverage, exhaustion or an empty budget.

use serde::{Deserialize, Serialize};

use super::config::{exhausted, ExhaustionWindow};
use crate::agents::{AgentFeedback, CrtAgent, LlmAgent};
use crate::coverage::{coverage_rate, BinIndex, CoverageState};
use crate::dut::{Dut, DutKind};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    FullCoverage,
    Exhausted,
    BudgetExhausted,
    Aborted,
    /// A constrained-random run used up its fixed stimulus count.
    StimulusLimit,
}

impl TrialStatus {
    /// Trials that ended on their own terms, as opposed to being cut off.
    pub fn is_completed(self) -> bool {
        matches!(self, TrialStatus::FullCoverage | TrialStatus::Exhausted)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::FullCoverage => "full_coverage",
            TrialStatus::Exhausted => "exhausted",
            TrialStatus::BudgetExhausted => "budget_exhausted",
            TrialStatus::Aborted => "aborted",
            TrialStatus::StimulusLimit => "stimulus_limit",
        }
    }
}

/// One LLM response (or one chunk of a constrained-random stream) and its
/// effect on coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseEvent {
    pub trial: u32,
    pub response_idx: u32,
    pub stimuli: u64,
    #[serde(default)]
    pub rejected: u64,
    pub new_bins: Vec<String>,
    pub coverage: usize,
    pub rate: f64,
    pub restart: bool,
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(default = "yes")]
    pub well_formed: bool,
    #[serde(default)]
    pub gibberish: bool,
    #[serde(default)]
    pub cycle_capped: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u32,
    pub status: TrialStatus,
    pub events: Vec<ResponseEvent>,
    pub covered: usize,
    pub rate: f64,
    /// Assistant responses, regenerations included.
    pub messages: u32,
    pub stimuli: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn tokens(&self) -> u64 {
        self.tokens_in + self.tokens_out
    }
}

/// Token budget shared by the trials of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    limit: u64,
    spent: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Self { limit, spent: 0 }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn spent(&self) -> u64 {
        self.spent
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.spent)
    }

    pub fn charge(&mut self, tokens: u64) {
        self.spent += tokens;
    }
}

/// Runs one LLM trial. Before every call the backend's cost bound is
/// checked against the remaining budget, so a trial never overspends.
pub fn run_trial(
    dut: &mut dyn Dut,
    agent: &mut LlmAgent,
    trial: u32,
    exhaustion: &[ExhaustionWindow],
    budget: &mut Budget,
) -> Result<TrialRecord> {
    dut.reset();
    agent.reset_trial();
    let plan = dut.plan().clone();
    let mut state = CoverageState::new(&plan);
    let mut record = TrialRecord {
        trial,
        status: TrialStatus::Exhausted,
        events: Vec::new(),
        covered: 0,
        rate: 0.0,
        messages: 0,
        stimuli: 0,
        tokens_in: 0,
        tokens_out: 0,
        error: None,
    };
    let mut deltas = Vec::new();
    let mut hits = Vec::new();
    let mut new_bins: Vec<BinIndex> = Vec::new();
    loop {
        let rate = coverage_rate(&state, &plan)?;
        let status = dut.status_line();
        let feedback = AgentFeedback { state: &state, rate, status: status.as_deref() };
        let prepared = agent.prepare(&feedback)?;
        if budget.remaining() == 0 || prepared.max_cost > budget.remaining() {
            record.status = TrialStatus::BudgetExhausted;
            break;
        }
        let outcome = match agent.call(prepared) {
            Ok(o) => o,
            Err(e) => {
                record.status = TrialStatus::Aborted;
                record.error = Some(e.to_string());
                break;
            }
        };
        budget.charge(outcome.tokens_in + outcome.tokens_out);
        record.messages += 1;
        record.tokens_in += outcome.tokens_in;
        record.tokens_out += outcome.tokens_out;

        new_bins.clear();
        let mut rejected = 0;
        while let Some(stimulus) = agent.next_stimulus() {
            hits.clear();
            record.stimuli += 1;
            match dut.apply(&stimulus, &mut hits) {
                Ok(()) => {
                    state.record_hits_collect(&hits, &mut new_bins)?;
                }
                Err(_) => rejected += 1,
            }
            if state.is_complete() {
                break;
            }
        }
        let rate = coverage_rate(&state, &plan)?;
        let complete = state.is_complete();
        let restart = !complete && agent.observe(&new_bins, rate, rejected > 0);
        deltas.push(new_bins.len());
        record.events.push(ResponseEvent {
            trial,
            response_idx: record.messages,
            stimuli: outcome.stimuli as u64,
            rejected,
            new_bins: new_bins.iter().map(|b| plan.id(*b).to_owned()).collect(),
            coverage: state.covered_count(),
            rate,
            restart,
            tokens_in: outcome.tokens_in,
            tokens_out: outcome.tokens_out,
            well_formed: outcome.well_formed,
            gibberish: outcome.gibberish,
            cycle_capped: outcome.cycle_capped,
        });
        if complete {
            record.status = TrialStatus::FullCoverage;
            break;
        }
        if exhausted(&deltas, exhaustion) {
            record.status = TrialStatus::Exhausted;
            break;
        }
    }
    record.covered = state.covered_count();
    record.rate = coverage_rate(&state, &plan)?;
    Ok(record)
}

/// Stimuli per event in a constrained-random trial record.
pub const CRT_CHUNK: u64 = 10_000;

/// Feeds `count` constrained-random stimuli into `dut`, stopping early only
/// on full coverage. Emits one event per chunk of stimuli.
pub fn run_baseline(dut: &mut dyn Dut, kind: DutKind, count: u64, seed: u64, chunk: u64) -> Result<TrialRecord> {
    dut.reset();
    let plan = dut.plan().clone();
    let mut state = CoverageState::new(&plan);
    let mut agent = CrtAgent::new(kind, seed);
    let mut record = TrialRecord {
        trial: 1,
        status: TrialStatus::StimulusLimit,
        events: Vec::new(),
        covered: 0,
        rate: 0.0,
        messages: 0,
        stimuli: 0,
        tokens_in: 0,
        tokens_out: 0,
        error: None,
    };
    let chunk = chunk.max(1);
    let mut hits = Vec::new();
    let mut new_bins = Vec::new();
    let mut in_chunk = 0;
    let mut rejected = 0;
    while record.stimuli < count && !state.is_complete() {
        let stimulus = agent.next(dut.program_counter());
        hits.clear();
        match dut.apply(&stimulus, &mut hits) {
            Ok(()) => {
                state.record_hits_collect(&hits, &mut new_bins)?;
            }
            Err(_) => rejected += 1,
        }
        record.stimuli += 1;
        in_chunk += 1;
        if in_chunk == chunk || record.stimuli == count || state.is_complete() {
            record.events.push(ResponseEvent {
                trial: 1,
                response_idx: record.events.len() as u32 + 1,
                stimuli: in_chunk,
                rejected,
                new_bins: new_bins.iter().map(|b| plan.id(*b).to_owned()).collect(),
                coverage: state.covered_count(),
                rate: coverage_rate(&state, &plan)?,
                restart: false,
                tokens_in: 0,
                tokens_out: 0,
                well_formed: true,
                gibberish: false,
                cycle_capped: false,
            });
            new_bins.clear();
            in_chunk = 0;
            rejected = 0;
        }
    }
    if state.is_complete() {
        record.status = TrialStatus::FullCoverage;
    }
    record.covered = state.covered_count();
    record.rate = coverage_rate(&state, &plan)?;
    Ok(record)
}
