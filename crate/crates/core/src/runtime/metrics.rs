//! Aggregate statistics over the trials of an experiment.

use serde::{Deserialize, Serialize};

use super::trial::{TrialRecord, TrialStatus};

/// Per-trial line of an experiment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u32,
    pub status: TrialStatus,
    pub messages: u32,
    pub covered: usize,
    pub rate: f64,
    pub stimuli: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&TrialRecord> for TrialSummary {
    fn from(r: &TrialRecord) -> Self {
        Self {
            trial: r.trial,
            status: r.status,
            messages: r.messages,
            covered: r.covered,
            rate: r.rate,
            stimuli: r.stimuli,
            tokens_in: r.tokens_in,
            tokens_out: r.tokens_out,
            error: r.error.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub trials: usize,
    /// Trials that ended in full coverage or exhaustion; message statistics
    /// are computed over these only.
    pub completed_trials: usize,
    pub max_coverage: usize,
    pub max_rate: f64,
    pub avg_messages: Option<f64>,
    pub stdev_messages: Option<f64>,
    pub avg_cov_per_msg: Option<f64>,
    pub stdev_cov_per_msg: Option<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (n - 1 denominator); absent below two values.
pub fn sample_stdev(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

pub fn compute_metrics(trials: &[TrialSummary], plan_size: usize) -> Metrics {
    let max_coverage = trials.iter().map(|t| t.covered).max().unwrap_or(0);
    let completed: Vec<&TrialSummary> = trials.iter().filter(|t| t.status.is_completed()).collect();
    let messages: Vec<f64> = completed.iter().map(|t| f64::from(t.messages)).collect();
    let per_msg: Vec<f64> = completed
        .iter()
        .filter(|t| t.messages > 0)
        .map(|t| t.covered as f64 / f64::from(t.messages))
        .collect();
    Metrics {
        trials: trials.len(),
        completed_trials: completed.len(),
        max_coverage,
        max_rate: if plan_size == 0 { 0.0 } else { max_coverage as f64 / plan_size as f64 },
        avg_messages: mean(&messages),
        stdev_messages: sample_stdev(&messages),
        avg_cov_per_msg: mean(&per_msg),
        stdev_cov_per_msg: sample_stdev(&per_msg),
    }
}
