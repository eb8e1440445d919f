//! Dialogue restarting and what happens to the best-exchange buffer.

use serde::{Deserialize, Serialize};

use super::context::{BestMessageBuffer, Dialogue};

/// New bins needed within the tolerance window to avoid a restart.
pub const RESTART_MIN_HITS: usize = 3;
/// Responses after a stable restart during which the buffer is ignored.
pub const STABLE_SUPPRESSION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartPlan {
    #[default]
    Normal,
    Low,
    High,
    CoverageRateBased,
}

impl RestartPlan {
    /// Tolerance window in responses at the given coverage rate.
    pub fn window(self, rate: f64, threshold: f64) -> usize {
        match self {
            RestartPlan::Normal => 7,
            RestartPlan::Low => 4,
            RestartPlan::High => 10,
            RestartPlan::CoverageRateBased if rate < threshold => 4,
            RestartPlan::CoverageRateBased => 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferReset {
    #[default]
    Clear,
    Keep,
    StableKeep,
}

/// `deltas` holds the new-bin count of every response since the last restart.
pub fn should_restart(deltas: &[usize], plan: RestartPlan, rate: f64, threshold: f64) -> bool {
    let t = plan.window(rate, threshold);
    deltas.len() >= t && deltas[deltas.len() - t..].iter().sum::<usize>() < RESTART_MIN_HITS
}

/// Truncates the dialogue and applies the buffer policy. Returns how many
/// upcoming responses must be generated without the buffer.
pub fn on_restart(dialogue: &mut Dialogue, buffer: &mut BestMessageBuffer, reset: BufferReset) -> usize {
    dialogue.restart();
    match reset {
        BufferReset::Clear => {
            buffer.clear();
            0
        }
        BufferReset::Keep => 0,
        BufferReset::StableKeep => STABLE_SUPPRESSION,
    }
}
