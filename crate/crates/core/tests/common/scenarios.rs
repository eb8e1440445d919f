//! Scenarios shared by the integration tests and the acceptance runner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stimloop_core::backend::ReplayEntry;
use stimloop_core::runtime::{
    default_exhaustion, to_csv, to_text_table, verify_log, AgentKind, Budget, LogRecord, NullSink, COLUMNS,
};
use stimloop_core::{
    run_experiment, run_experiment_on, run_trial, DutKind, ExperimentConfig, HttpBackend, StrategyConfig,
    TrialRecord, TrialStatus,
};

use super::stub::{self, completion};
use super::{check_golden, fixture, replay, toy_agent, ToyDut};

pub const GOLDEN_TRIAL: &str = "toy_trial_golden.json";
pub const GOLDEN_RESTARTS: [u32; 5] = [8, 15, 22, 29, 36];
pub const GOLDEN_LENGTH: u32 = 41;

pub fn toy_script() -> Vec<ReplayEntry> {
    let text = std::fs::read_to_string(fixture("toy_replay.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// The scripted ten-bin trial behind the golden file.
pub fn golden_trial() -> TrialRecord {
    let mut dut = ToyDut::new(10);
    let mut agent = toy_agent(&dut, toy_script(), StrategyConfig::default(), 7);
    let mut budget = Budget::new(1_000_000);
    run_trial(&mut dut, &mut agent, 1, &default_exhaustion(), &mut budget).unwrap()
}

/// Golden comparison plus the hand-derived shape of the trial.
pub fn check_golden_trial() -> Result<(), String> {
    let record = golden_trial();
    let restarts: Vec<u32> = record.events.iter().filter(|e| e.restart).map(|e| e.response_idx).collect();
    if restarts != GOLDEN_RESTARTS {
        return Err(format!("restarts after responses {restarts:?}"));
    }
    if record.status != TrialStatus::Exhausted || record.messages != GOLDEN_LENGTH {
        return Err(format!("{} after {} responses", record.status.as_str(), record.messages));
    }
    let gains: Vec<(u32, usize)> = record
        .events
        .iter()
        .filter(|e| !e.new_bins.is_empty())
        .map(|e| (e.response_idx, e.new_bins.len()))
        .collect();
    if gains != [(1, 3), (10, 1), (30, 1)] {
        return Err(format!("coverage gains {gains:?}"));
    }
    let gibberish: Vec<u32> = record.events.iter().filter(|e| e.gibberish).map(|e| e.response_idx).collect();
    if gibberish != [5] {
        return Err(format!("gibberish responses {gibberish:?}"));
    }
    let json = serde_json::to_string_pretty(&record).map_err(|e| e.to_string())? + "\n";
    check_golden(GOLDEN_TRIAL, &json)
}

fn random_entry(rng: &mut ChaCha8Rng) -> ReplayEntry {
    let text = match rng.random_range(0..6) {
        0 => "no idea".to_owned(),
        1 => "```\n9\n```".to_owned(),
        _ => format!("```\n{}\n```", rng.random_range(0..12)),
    };
    if rng.random_bool(0.1) {
        return ReplayEntry::error("connection reset");
    }
    ReplayEntry::Full {
        text,
        tokens_in: Some(rng.random_range(1..400)),
        tokens_out: Some(rng.random_range(0..200)),
    }
}

/// One random script and budget; checks the budget is never exceeded and
/// that the accounting adds up.
pub fn budget_case(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let script: Vec<ReplayEntry> = (0..rng.random_range(1..120)).map(|_| random_entry(&mut rng)).collect();
    let budget = rng.random_range(0..20_000);
    let mut config = ExperimentConfig::new(DutKind::Stride, AgentKind::Llm);
    config.budget_tokens = budget;
    config.seed = seed;
    let out = run_experiment_on(Box::new(ToyDut::new(10)), &config, Some(replay(script)), &mut NullSink)
        .map_err(|e| e.to_string())?;
    let spent: u64 = out.records.iter().map(TrialRecord::tokens).sum();
    if spent > budget {
        return Err(format!("seed {seed}: spent {spent} of {budget}"));
    }
    if spent != out.report.tokens_used {
        return Err(format!("seed {seed}: report says {} but trials sum to {spent}", out.report.tokens_used));
    }
    for r in &out.records {
        let events: u64 = r.events.iter().map(|e| e.tokens_in + e.tokens_out).sum();
        if events != r.tokens() {
            return Err(format!("seed {seed}: trial {} events sum to {events}, record {}", r.trial, r.tokens()));
        }
        if r.messages == 0 && r.status != TrialStatus::Aborted {
            return Err(format!("seed {seed}: empty {} trial {} was kept", r.status.as_str(), r.trial));
        }
    }
    let last = out.records.len().saturating_sub(1);
    for (i, r) in out.records.iter().enumerate() {
        let cut = matches!(r.status, TrialStatus::BudgetExhausted | TrialStatus::Aborted);
        if cut && i != last {
            return Err(format!("seed {seed}: trial {} ended {} but was not last", r.trial, r.status.as_str()));
        }
    }
    Ok(())
}

/// Drives a live-backend stride experiment against the stub server and
/// checks the log verifies and the report has the expected table shape.
pub fn check_stub_report() -> Result<(), String> {
    let reply = completion("```\n0\n16\n32\n48\n```", Some((100, 20)));
    let server = stub::start(vec![(200, reply)]);
    let mut config = ExperimentConfig::new(DutKind::Stride, AgentKind::Llm);
    config.budget_tokens = 20_000;
    config.backend.endpoint = server.url.clone();
    config.backend.api_key_env = None;
    let backend = HttpBackend::new(config.backend.clone()).map_err(|e| e.to_string())?;
    let mut log: Vec<LogRecord> = Vec::new();
    let out = run_experiment(&config, Some(Box::new(backend)), &mut log).map_err(|e| e.to_string())?;

    let calls: u32 = out.records.iter().map(|r| r.messages).sum();
    if calls == 0 || server.requests.lock().unwrap().len() != calls as usize {
        return Err(format!("{calls} responses recorded"));
    }
    if out.report.tokens_used != 120 * u64::from(calls) || out.report.tokens_used > config.budget_tokens {
        return Err(format!("{} tokens for {calls} calls", out.report.tokens_used));
    }
    let verified = verify_log(&log).map_err(|e| e.to_string())?;
    if verified != out.report {
        return Err("log does not reproduce the report".into());
    }

    let csv = to_csv(std::slice::from_ref(&out.report)).map_err(|e| e.to_string())?;
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let header: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(str::to_owned).collect();
    if header != COLUMNS {
        return Err(format!("CSV header {header:?}"));
    }
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let [row] = rows.as_slice() else {
        return Err(format!("{} CSV rows", rows.len()));
    };
    let trials: usize = row[2].parse().map_err(|_| format!("trials cell {:?}", &row[2]))?;
    let covered: usize = row[3].parse().map_err(|_| format!("coverage cell {:?}", &row[3]))?;
    let tokens: u64 = row[8].parse().map_err(|_| format!("tokens cell {:?}", &row[8]))?;
    if (&row[0], &row[1]) != ("llm-stride", "stride")
        || trials != out.records.len()
        || covered != out.report.metrics.max_coverage
        || tokens != out.report.tokens_used
        || !row[4].ends_with('%')
    {
        return Err(format!("CSV row {row:?}"));
    }
    let table = to_text_table(std::slice::from_ref(&out.report));
    let lines: Vec<&str> = table.lines().collect();
    if lines.len() != 3 || !lines[0].starts_with("Config") || !lines[2].starts_with("llm-stride") {
        return Err(format!("text table:\n{table}"));
    }
    let first: serde_json::Value = serde_json::from_str(&server.requests.lock().unwrap()[0]).map_err(|e| e.to_string())?;
    if first["model"] != "gpt-3.5-turbo-0613" || first["messages"][0]["role"] != "system" {
        return Err(format!("request body {first}"));
    }
    Ok(())
}
