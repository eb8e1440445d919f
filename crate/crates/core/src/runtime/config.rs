//! Experiment configuration file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::BackendConfig;
use crate::dut::DutKind;
use crate::error::{Error, Result};
use crate::prompting::StrategyConfig;

pub const DEFAULT_BUDGET_TOKENS: u64 = 10_000_000;
pub const DEFAULT_CRT_STIMULI: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Crt,
    #[default]
    Llm,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Crt => "crt",
            AgentKind::Llm => "llm",
        }
    }
}

/// A trial is exhausted once the last `window` responses exist and hit
/// fewer than `below` new bins in total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustionWindow {
    pub window: usize,
    pub below: usize,
}

pub fn default_exhaustion() -> Vec<ExhaustionWindow> {
    vec![ExhaustionWindow { window: 25, below: 1 }, ExhaustionWindow { window: 40, below: 3 }]
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET_TOKENS
}

fn default_crt_stimuli() -> u64 {
    DEFAULT_CRT_STIMULI
}

fn default_regeneration_cap() -> u32 {
    crate::agents::REGENERATION_CAP
}

fn default_gibberish_ratio() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dut: DutKind,
    #[serde(default)]
    pub agent: AgentKind,
    /// Free-form name shown in reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default = "default_budget")]
    pub budget_tokens: u64,
    #[serde(default)]
    pub seed: u64,
    /// Stimuli generated by a constrained-random run.
    #[serde(default = "default_crt_stimuli")]
    pub crt_stimuli: u64,
    #[serde(default = "default_exhaustion")]
    pub exhaustion: Vec<ExhaustionWindow>,
    #[serde(default = "default_regeneration_cap")]
    pub regeneration_cap: u32,
    #[serde(default = "default_gibberish_ratio")]
    pub gibberish_ratio: f64,
    /// Optional cap on the number of trials, on top of the token budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_trials: Option<u32>,
}

impl ExperimentConfig {
    pub fn new(dut: DutKind, agent: AgentKind) -> Self {
        Self {
            dut,
            agent,
            label: None,
            strategy: StrategyConfig::default(),
            backend: BackendConfig::default(),
            budget_tokens: DEFAULT_BUDGET_TOKENS,
            seed: 0,
            crt_stimuli: DEFAULT_CRT_STIMULI,
            exhaustion: default_exhaustion(),
            regeneration_cap: crate::agents::REGENERATION_CAP,
            gibberish_ratio: 0.2,
            max_trials: None,
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        self.backend
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.exhaustion.is_empty() {
            return Err(Error::Config("at least one exhaustion window is required".into()));
        }
        if let Some(w) = self.exhaustion.iter().find(|w| w.window == 0 || w.below == 0) {
            return Err(Error::Config(format!("exhaustion window {w:?} must have window > 0 and below > 0")));
        }
        if self.regeneration_cap == 0 {
            return Err(Error::Config("regeneration_cap must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.gibberish_ratio) {
            return Err(Error::Config("gibberish_ratio must be in [0, 1]".into()));
        }
        if self.agent == AgentKind::Crt && self.crt_stimuli == 0 {
            return Err(Error::Config("crt_stimuli must be > 0".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("{}-{}", self.agent.as_str(), self.dut))
    }
}

/// True when any exhaustion window is full and under its threshold.
/// `deltas` holds the new-bin count of every response in the trial.
pub fn exhausted(deltas: &[usize], rules: &[ExhaustionWindow]) -> bool {
    rules.iter().any(|r| {
        deltas.len() >= r.window && deltas[deltas.len() - r.window..].iter().sum::<usize>() < r.below
    })
}
