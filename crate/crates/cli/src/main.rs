//! `stimloop` command line: run experiments, constrained-random baselines,
//! inspect coverage plans and re-check experiment logs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use stimloop_core::backend::{RecordingBackend, Retrying};
use stimloop_core::runtime::{to_csv, to_text_table, verify_log_file, AgentKind, JsonlLog, CRT_CHUNK};
use stimloop_core::{
    make_dut, plan_for, run_baseline, run_experiment, ChatBackend, DutKind, ExperimentConfig, ExperimentReport,
    HttpBackend, ReplayBackend,
};

#[derive(Parser)]
#[command(name = "stimloop", version, about = "Coverage-driven stimulus generation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's token budget.
        #[arg(long)]
        budget: Option<u64>,
        /// `live` for the HTTP endpoint in the config, or `replay:<script.json>`.
        #[arg(long, default_value = "live")]
        backend: String,
        /// Save every live response as a replay script.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Directory for the JSONL log and CSV report.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Constrained-random baseline over one or more seeds.
    Baseline {
        #[arg(long)]
        dut: DutKind,
        #[arg(long, default_value_t = 1_000_000)]
        count: u64,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Show a DUT's coverage plan.
    Plan {
        #[arg(long)]
        dut: DutKind,
        /// Print every bin as JSON instead of the size.
        #[arg(long)]
        dump: bool,
    },
    /// Print a default experiment config.
    Config {
        #[arg(long)]
        dut: DutKind,
        #[arg(long, default_value = "llm")]
        agent: String,
    },
    /// Verify experiment logs and print their report table.
    Report {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_agent(s: &str) -> Result<AgentKind> {
    match s {
        "llm" => Ok(AgentKind::Llm),
        "crt" => Ok(AgentKind::Crt),
        other => bail!("unknown agent `{other}` (expected llm or crt)"),
    }
}

fn make_backend(choice: &str, record: Option<&Path>, config: &ExperimentConfig) -> Result<Box<dyn ChatBackend + Send>> {
    if let Some(path) = choice.strip_prefix("replay:") {
        if record.is_some() {
            bail!("--record only applies to the live backend");
        }
        let replay = ReplayBackend::from_file(Path::new(path)).with_context(|| format!("loading {path}"))?;
        return Ok(Box::new(Retrying::from_config(replay, &config.backend)));
    }
    if choice != "live" {
        bail!("unknown backend `{choice}` (expected live or replay:<file>)");
    }
    let http = HttpBackend::new(config.backend.clone())?;
    Ok(match record {
        Some(path) => Box::new(Retrying::from_config(RecordingBackend::new(http, path), &config.backend)),
        None => Box::new(Retrying::from_config(http, &config.backend)),
    })
}

fn write_reports(out: &Path, stem: &str, reports: &[ExperimentReport]) -> Result<()> {
    let csv = out.join(format!("{stem}.csv"));
    fs::write(&csv, to_csv(reports)?).with_context(|| format!("writing {}", csv.display()))?;
    Ok(())
}

fn run(
    config: &Path,
    seed: Option<u64>,
    budget: Option<u64>,
    backend: &str,
    record: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mut config = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(budget) = budget {
        config.budget_tokens = budget;
    }
    let backend = match config.agent {
        AgentKind::Llm => Some(make_backend(backend, record, &config)?),
        AgentKind::Crt => None,
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let stem = format!("{}-seed{}", config.label(), config.seed);
    let log_path = out.join(format!("{stem}.jsonl"));
    let mut log = JsonlLog::create(&log_path)?;
    let output = run_experiment(&config, backend, &mut log)?;
    drop(log);
    let reports = [output.report];
    write_reports(out, &stem, &reports)?;
    print!("{}", to_text_table(&reports));
    for note in &reports[0].notes {
        println!("note: {note}");
    }
    println!("log: {}", log_path.display());
    Ok(())
}

fn baseline(dut: DutKind, count: u64, first: u64, seeds: u64) -> Result<()> {
    if seeds == 0 || count == 0 {
        bail!("--count and --seeds must be positive");
    }
    let mut rates = Vec::new();
    for seed in first..first + seeds {
        let mut model = make_dut(dut)?;
        let r = run_baseline(model.as_mut(), dut, count, seed, CRT_CHUNK)?;
        println!(
            "seed {seed}: {} of {} bins ({:.2}%) after {} stimuli",
            r.covered,
            model.plan().len(),
            r.rate * 100.0,
            r.stimuli
        );
        rates.push(r.rate * 100.0);
    }
    if rates.len() > 1 {
        println!("mean: {:.2}%", rates.iter().sum::<f64>() / rates.len() as f64);
    }
    Ok(())
}

fn plan(dut: DutKind, dump: bool) -> Result<()> {
    let plan = plan_for(dut)?;
    if dump {
        println!("{}", serde_json::to_string_pretty(plan.bins())?);
    } else {
        println!("{dut}: {} bins", plan.len());
    }
    Ok(())
}

fn report(logs: &[PathBuf], csv: Option<&Path>) -> Result<()> {
    let reports = logs
        .iter()
        .map(|p| verify_log_file(p).with_context(|| format!("verifying {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    print!("{}", to_text_table(&reports));
    if let Some(path) = csv {
        fs::write(path, to_csv(&reports)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, seed, budget, backend, record, out } => {
            run(&config, seed, budget, &backend, record.as_deref(), &out)
        }
        Command::Baseline { dut, count, seed, seeds } => baseline(dut, count, seed, seeds),
        Command::Plan { dut, dump } => plan(dut, dump),
        Command::Config { dut, agent } => {
            let config = ExperimentConfig::new(dut, parse_agent(&agent)?);
            println!("{}", serde_json::to_string_pretty(&config)?);
            Ok(())
        }
        Command::Report { logs, csv } => report(&logs, csv.as_deref()),
    }
}
