#![allow(dead_code)]

pub mod oracles;
pub mod scenarios;
pub mod strategy;
pub mod stub;

use std::collections::BTreeMap;
use std::time::Duration;

use stimloop_core::agents::LlmAgentOptions;
use stimloop_core::backend::{ReplayBackend, ReplayEntry, Retrying};
use stimloop_core::{
    BinDescriptor, BinGroup, BinIndex, CoveragePlan, Difficulty, Dut, LlmAgent, Stimulus, StimulusRejected,
    StrategyConfig, TaskProfile, WireFormat,
};

/// Bins `toy_0 .. toy_{n-1}`; the integer `k` hits `toy_k`. Odd bins are harder.
pub fn toy_plan(n: usize) -> CoveragePlan {
    assert!(n <= 10, "ids must sort numerically");
    let bins = (0..n)
        .map(|i| {
            let d = if i % 2 == 0 { Difficulty::Easier } else { Difficulty::Harder };
            BinDescriptor::new(format!("toy_{i}"), format!("Send the value {i}."), d, BinGroup::Misc)
        })
        .collect();
    CoveragePlan::new("toy", bins).unwrap()
}

pub struct ToyDut {
    plan: CoveragePlan,
}

impl ToyDut {
    pub fn new(n: usize) -> Self {
        Self { plan: toy_plan(n) }
    }
}

impl Dut for ToyDut {
    fn plan(&self) -> &CoveragePlan {
        &self.plan
    }

    fn profile(&self) -> TaskProfile {
        TaskProfile {
            name: "toy counter".into(),
            intro: "Each value k below the plan size hits bin toy_k.".into(),
            one_line_intro: "Send small integers.".into(),
            plan_summary: "- toy bins: one per small integer.".into(),
            format: WireFormat::Integers,
            negative_hints: BTreeMap::new(),
        }
    }

    fn reset(&mut self) {}

    fn apply(&mut self, stimulus: &Stimulus, hits: &mut Vec<BinIndex>) -> Result<(), StimulusRejected> {
        match stimulus {
            Stimulus::Word(w) if (*w as usize) < self.plan.len() => {
                hits.push(BinIndex(*w));
                Ok(())
            }
            Stimulus::Word(_) => Ok(()),
            Stimulus::Updates(_) => Err(StimulusRejected("toy takes integers".into())),
        }
    }
}

pub fn replay(entries: Vec<ReplayEntry>) -> Box<Retrying<ReplayBackend>> {
    Box::new(Retrying::new(ReplayBackend::new(entries), 2, Duration::ZERO))
}

pub fn toy_agent(dut: &ToyDut, entries: Vec<ReplayEntry>, strategy: StrategyConfig, seed: u64) -> LlmAgent {
    LlmAgent::new(
        dut.plan().clone(),
        dut.profile(),
        strategy,
        LlmAgentOptions::default(),
        replay(entries),
        seed,
    )
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Compares `actual` against a checked-in file; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = fixture(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map_or_else(|| "length differs".to_owned(), |n| format!("first difference at line {}", n + 1));
        Err(format!("{name} does not match the golden file: {line}"))
    }
}
