//! The LLM-driven agent: prompt construction, backend calls, extraction and
//! the stimulus buffer the trial loop drains.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::extract::{extract_stimuli_with, ExtractOptions};
use crate::backend::{BackendError, ChatBackend, ChatMessage};
use crate::coverage::{BinDescriptor, BinIndex, CoveragePlan, CoverageState};
use crate::dut::{Stimulus, TaskProfile};
use crate::error::Result;
use crate::prompting::context::{select_context, BestMessageBuffer, Dialogue, Exchange};
use crate::prompting::restart::{on_restart, should_restart};
use crate::prompting::sampling::MissedBinSampler;
use crate::prompting::templates::{build_initial_query, build_iterative_query, system_message, PreviousResult};
use crate::prompting::StrategyConfig;

/// Consecutive empty extractions after which a generation cycle gives up.
pub const REGENERATION_CAP: u32 = 5;

/// Coverage state after the most recent stimulus.
#[derive(Debug, Clone, Copy)]
pub struct AgentFeedback<'a> {
    pub state: &'a CoverageState,
    pub rate: f64,
    /// DUT extras such as the CPU's program counter and last instruction.
    pub status: Option<&'a str>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlmAgentOptions {
    pub extract: ExtractOptions,
    pub regeneration_cap: u32,
}

impl Default for LlmAgentOptions {
    fn default() -> Self {
        Self { extract: ExtractOptions::default(), regeneration_cap: REGENERATION_CAP }
    }
}

/// A prompt ready to send, with the backend's bound on what it may cost.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub messages: Vec<ChatMessage>,
    pub max_cost: u64,
    query: String,
    initial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseOutcome {
    pub stimuli: usize,
    pub well_formed: bool,
    pub gibberish: bool,
    /// This response was the last empty one the cycle allows.
    pub cycle_capped: bool,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

pub struct LlmAgent {
    plan: CoveragePlan,
    profile: TaskProfile,
    strategy: StrategyConfig,
    options: LlmAgentOptions,
    backend: Box<dyn ChatBackend + Send>,
    rng: ChaCha8Rng,
    dialogue: Dialogue,
    buffer: BestMessageBuffer,
    sampler: MissedBinSampler,
    stimuli: VecDeque<Stimulus>,
    since_restart: Vec<usize>,
    suppress: usize,
    last: Option<PreviousResult>,
    last_malformed: bool,
    pending_iterative: bool,
    empty_streak: u32,
    seq: u64,
}

impl LlmAgent {
    pub fn new(
        plan: CoveragePlan,
        profile: TaskProfile,
        strategy: StrategyConfig,
        options: LlmAgentOptions,
        backend: Box<dyn ChatBackend + Send>,
        seed: u64,
    ) -> Self {
        let dialogue = Dialogue::new(system_message(&profile), build_initial_query(&profile, strategy.template_variant));
        Self {
            buffer: BestMessageBuffer::for_strategy(strategy.context),
            sampler: MissedBinSampler::new(strategy.missed_bin, strategy.sample_size, strategy.rate_threshold),
            plan,
            profile,
            strategy,
            options,
            backend,
            rng: ChaCha8Rng::seed_from_u64(seed),
            dialogue,
            stimuli: VecDeque::new(),
            since_restart: Vec::new(),
            suppress: 0,
            last: None,
            last_malformed: false,
            pending_iterative: false,
            empty_streak: 0,
            seq: 0,
        }
    }

    /// Fresh dialogue, buffer and counters for a new trial. The RNG and the
    /// backend carry on.
    pub fn reset_trial(&mut self) {
        self.dialogue.restart();
        self.buffer.clear();
        self.sampler.reset();
        self.stimuli.clear();
        self.since_restart.clear();
        self.suppress = 0;
        self.last = None;
        self.last_malformed = false;
        self.pending_iterative = false;
        self.empty_streak = 0;
        self.seq = 0;
    }

    pub fn dialogue(&self) -> &Dialogue {
        &self.dialogue
    }

    pub fn buffer(&self) -> &BestMessageBuffer {
        &self.buffer
    }

    pub fn next_stimulus(&mut self) -> Option<Stimulus> {
        self.stimuli.pop_front()
    }

    pub fn buffered(&self) -> usize {
        self.stimuli.len()
    }

    /// Builds the next prompt. Must only be called with an empty buffer.
    pub fn prepare(&mut self, feedback: &AgentFeedback<'_>) -> Result<Prepared> {
        assert!(self.stimuli.is_empty(), "generation requested while stimuli are still buffered");
        let Some(previous) = self.last.filter(|_| self.dialogue.initial_response.is_some()) else {
            let messages = vec![
                ChatMessage::system(&self.dialogue.system),
                ChatMessage::user(&self.dialogue.initial_query),
            ];
            let max_cost = self.backend.max_cost(&messages);
            return Ok(Prepared { messages, max_cost, query: self.dialogue.initial_query.clone(), initial: true });
        };
        let uncovered = feedback.state.uncovered_indices();
        let sampled = self.sampler.sample(&self.plan, &uncovered, feedback.rate, &mut self.rng)?;
        let bins: Vec<&BinDescriptor> = sampled.iter().filter_map(|b| self.plan.get(*b)).collect();
        let query =
            build_iterative_query(&self.profile, previous, &bins, self.strategy.template_variant, feedback.status);
        let mut messages = select_context(&self.dialogue, &self.buffer, self.strategy.context, self.suppress == 0);
        messages.push(ChatMessage::user(&query));
        let max_cost = self.backend.max_cost(&messages);
        Ok(Prepared { messages, max_cost, query, initial: false })
    }

    /// Sends a prepared prompt and buffers whatever stimuli come back.
    pub fn call(&mut self, prepared: Prepared) -> Result<ResponseOutcome, BackendError> {
        let completion = self.backend.complete(&prepared.messages)?;
        let extraction = extract_stimuli_with(&completion.text, self.profile.format, self.options.extract);
        if prepared.initial {
            self.dialogue.initial_response = Some(completion.text);
            self.pending_iterative = false;
        } else {
            let exchange = Exchange::new(prepared.query, completion.text, self.seq, &mut self.rng);
            self.dialogue.exchanges.push(exchange);
            self.pending_iterative = true;
        }
        self.seq += 1;
        let count = extraction.stimuli.len();
        self.stimuli.extend(extraction.stimuli);
        self.last_malformed = !extraction.well_formed;
        let mut cycle_capped = false;
        if count == 0 {
            self.empty_streak += 1;
            if self.empty_streak >= self.options.regeneration_cap {
                cycle_capped = true;
                self.empty_streak = 0;
            }
        } else {
            self.empty_streak = 0;
        }
        Ok(ResponseOutcome {
            stimuli: count,
            well_formed: extraction.well_formed,
            gibberish: extraction.gibberish,
            cycle_capped,
            tokens_in: completion.tokens_in,
            tokens_out: completion.tokens_out,
        })
    }

    /// Reports the bins newly hit by the latest response's stimuli and the
    /// coverage rate afterwards. `rejected` means the DUT refused some of
    /// them. Returns true when the dialogue was restarted.
    pub fn observe(&mut self, new_bins: &[BinIndex], rate: f64, rejected: bool) -> bool {
        let delta = new_bins.len();
        if self.pending_iterative {
            if let Some(e) = self.dialogue.exchanges.last_mut() {
                e.set_hits(&self.plan, new_bins);
                self.buffer.offer(e.clone());
            }
            self.pending_iterative = false;
        }
        self.last = Some(if self.last_malformed || rejected {
            PreviousResult::Malformed
        } else if delta == 0 {
            PreviousResult::NoNewBins
        } else {
            PreviousResult::Hits(delta)
        });
        self.since_restart.push(delta);
        self.sampler.observe(delta, rate);
        self.suppress = self.suppress.saturating_sub(1);
        if should_restart(&self.since_restart, self.strategy.restart, rate, self.strategy.rate_threshold) {
            self.suppress = on_restart(&mut self.dialogue, &mut self.buffer, self.strategy.buffer_reset);
            self.since_restart.clear();
            self.last = None;
            return true;
        }
        false
    }

    /// One generation cycle without a budget: prompts until a response
    /// yields stimuli or the regeneration cap is reached. Empty responses
    /// are observed as zero-hit responses.
    pub fn cycle(&mut self, feedback: &AgentFeedback<'_>) -> Result<Vec<ResponseOutcome>> {
        let mut out = Vec::new();
        loop {
            let prepared = self.prepare(feedback)?;
            let outcome = self.call(prepared)?;
            let done = outcome.stimuli > 0 || outcome.cycle_capped;
            out.push(outcome);
            if done {
                return Ok(out);
            }
            self.observe(&[], feedback.rate, false);
        }
    }
}
