//! Coverage-feedback prompts and the strategy engine that decides which
//! uncovered bins and which past exchanges go into each prompt, and when to
//! restart the dialogue.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod context;
pub mod restart;
pub mod sampling;
pub mod templates;

pub use context::{select_context, BestMessageBuffer, ContextStrategy, Dialogue, Exchange, HARDER_WEIGHT};
pub use restart::{on_restart, should_restart, BufferReset, RestartPlan, RESTART_MIN_HITS};
pub use sampling::{sample_pure_random, sample_type_based, MissedBinMethod, MissedBinSampler};
pub use templates::{
    build_initial_query, build_iterative_query, format_requirement, system_message, PreviousResult, TemplateVariant,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub template_variant: TemplateVariant,
    pub missed_bin: MissedBinMethod,
    pub context: ContextStrategy,
    pub restart: RestartPlan,
    pub buffer_reset: BufferReset,
    /// Coverage rate that switches the mixed sampler and the rate-based
    /// restart plan.
    pub rate_threshold: f64,
    /// Uncovered bins listed per iterative query.
    pub sample_size: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            template_variant: TemplateVariant::Original,
            missed_bin: MissedBinMethod::TypeBased,
            context: ContextStrategy::Recent,
            restart: RestartPlan::Normal,
            buffer_reset: BufferReset::Clear,
            rate_threshold: 0.15,
            sample_size: 7,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_threshold > 0.0 && self.rate_threshold < 1.0) {
            return Err(Error::Config(format!(
                "rate_threshold must be in (0, 1), got {}",
                self.rate_threshold
            )));
        }
        if self.sample_size < 3 {
            return Err(Error::Config(format!(
                "sample_size must be at least 3, got {}",
                self.sample_size
            )));
        }
        Ok(())
    }
}
