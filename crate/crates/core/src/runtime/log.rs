//! JSONL event log and its verifier.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::experiment::ExperimentReport;
use super::metrics::{compute_metrics, Metrics, TrialSummary};
use super::trial::ResponseEvent;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema_version: u32,
    pub label: String,
    pub dut: String,
    pub agent: String,
    pub plan_size: usize,
    pub budget_tokens: u64,
    pub seed: u64,
    pub config: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFooter {
    pub tokens_used: u64,
    pub metrics: Metrics,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Header(LogHeader),
    Event(ResponseEvent),
    TrialEnd(TrialSummary),
    ExperimentEnd(LogFooter),
}

pub trait LogSink {
    fn record(&mut self, record: &LogRecord) -> Result<()>;
}

/// Discards everything.
pub struct NullSink;

impl LogSink for NullSink {
    fn record(&mut self, _: &LogRecord) -> Result<()> {
        Ok(())
    }
}

impl LogSink for Vec<LogRecord> {
    fn record(&mut self, record: &LogRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// One JSON object per line.
pub struct JsonlLog<W: Write> {
    out: W,
}

impl JsonlLog<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> JsonlLog<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> LogSink for JsonlLog<W> {
    fn record(&mut self, record: &LogRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        if matches!(record, LogRecord::TrialEnd(_) | LogRecord::ExperimentEnd(_)) {
            self.out.flush()?;
        }
        Ok(())
    }
}

pub fn read_log(reader: impl BufRead) -> Result<Vec<LogRecord>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Log(format!("line {}: {e}", n + 1)))?;
        out.push(record);
    }
    Ok(out)
}

/// Rebuilds the experiment report from a log, checking internal
/// consistency and that the recomputed metrics equal the logged ones.
pub fn verify_log(records: &[LogRecord]) -> Result<ExperimentReport> {
    let bad = |m: String| Err(Error::Log(m));
    let Some(LogRecord::Header(header)) = records.first() else {
        return bad("log does not start with a header".into());
    };
    if header.schema_version != SCHEMA_VERSION {
        return bad(format!("unsupported schema_version {}", header.schema_version));
    }
    let mut events: BTreeMap<u32, Vec<&ResponseEvent>> = BTreeMap::new();
    let mut trials: Vec<TrialSummary> = Vec::new();
    let mut footer = None;
    for record in &records[1..] {
        if footer.is_some() {
            return bad("records after experiment_end".into());
        }
        match record {
            LogRecord::Header(_) => return bad("second header".into()),
            LogRecord::Event(e) => events.entry(e.trial).or_default().push(e),
            LogRecord::TrialEnd(t) => trials.push(t.clone()),
            LogRecord::ExperimentEnd(f) => footer = Some(f),
        }
    }
    let Some(footer) = footer else {
        return bad("log has no experiment_end record".into());
    };
    let llm = header.agent == "llm";
    for t in &trials {
        let evs = events.remove(&t.trial).unwrap_or_default();
        if evs.windows(2).any(|w| w[1].coverage < w[0].coverage) {
            return bad(format!("trial {}: coverage decreases", t.trial));
        }
        if evs.iter().enumerate().any(|(i, e)| e.response_idx as usize != i + 1) {
            return bad(format!("trial {}: response indices are not consecutive", t.trial));
        }
        if evs.iter().map(|e| e.new_bins.len()).sum::<usize>() != t.covered {
            return bad(format!("trial {}: new bins do not add up to the final coverage", t.trial));
        }
        let (tin, tout) = evs.iter().fold((0, 0), |(a, b), e| (a + e.tokens_in, b + e.tokens_out));
        if (tin, tout) != (t.tokens_in, t.tokens_out) {
            return bad(format!("trial {}: token totals do not match its events", t.trial));
        }
        if llm && evs.len() != t.messages as usize {
            return bad(format!("trial {}: {} events for {} messages", t.trial, evs.len(), t.messages));
        }
        if !llm && evs.iter().map(|e| e.stimuli).sum::<u64>() != t.stimuli {
            return bad(format!("trial {}: chunk sizes do not add up to the stimulus count", t.trial));
        }
    }
    if let Some(orphan) = events.keys().next() {
        return bad(format!("events for trial {orphan} without a trial_end record"));
    }
    let used: u64 = trials.iter().map(|t| t.tokens_in + t.tokens_out).sum();
    if used != footer.tokens_used {
        return bad(format!("tokens_used {} but trials sum to {used}", footer.tokens_used));
    }
    if llm && used > header.budget_tokens {
        return bad(format!("{used} tokens used with a budget of {}", header.budget_tokens));
    }
    let metrics = compute_metrics(&trials, header.plan_size);
    if metrics != footer.metrics {
        return bad(format!("recomputed metrics {metrics:?} differ from logged {:?}", footer.metrics));
    }
    Ok(ExperimentReport {
        schema_version: header.schema_version,
        label: header.label.clone(),
        dut: header.dut.clone(),
        agent: header.agent.clone(),
        plan_size: header.plan_size,
        budget_tokens: header.budget_tokens,
        seed: header.seed,
        tokens_used: used,
        trials,
        metrics,
        notes: footer.notes.clone(),
    })
}

pub fn verify_log_file(path: &Path) -> Result<ExperimentReport> {
    let file = File::open(path)?;
    verify_log(&read_log(std::io::BufReader::new(file))?)
}
