//! Stimulus agents: the constrained-random baseline and the LLM-driven agent.

pub mod crt;
pub mod extract;
pub mod llm;

pub use crt::{crt_next, random_cpu_word, CrtAgent};
pub use extract::{extract_stimuli, extract_stimuli_with, ExtractOptions, ExtractionResult};
pub use llm::{AgentFeedback, LlmAgent, LlmAgentOptions, Prepared, ResponseOutcome, REGENERATION_CAP};
