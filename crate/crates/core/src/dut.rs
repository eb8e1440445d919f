//! The design-under-test contract shared by the three behavioral models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coverage::{BinGroup, BinIndex, CoveragePlan};
use crate::cpu::{CpuDut, MemoryUpdate};
use crate::decoder::DecoderDut;
use crate::error::Result;
use crate::stride::StrideDut;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DutKind {
    Stride,
    Decoder,
    Cpu,
}

impl DutKind {
    pub const ALL: [DutKind; 3] = [DutKind::Stride, DutKind::Decoder, DutKind::Cpu];

    pub fn wire_format(self) -> WireFormat {
        match self {
            DutKind::Stride | DutKind::Decoder => WireFormat::Integers,
            DutKind::Cpu => WireFormat::MemoryUpdates,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DutKind::Stride => "stride",
            DutKind::Decoder => "decoder",
            DutKind::Cpu => "cpu",
        }
    }
}

impl fmt::Display for DutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DutKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stride" => Ok(DutKind::Stride),
            "decoder" => Ok(DutKind::Decoder),
            "cpu" => Ok(DutKind::Cpu),
            other => Err(format!("unknown DUT `{other}` (expected stride, decoder or cpu)")),
        }
    }
}

/// How stimuli are written in LLM responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireFormat {
    /// Unsigned 32-bit integers, decimal or `0x` hex.
    Integers,
    /// JSON array of `[address, instruction]` pairs per timestep.
    MemoryUpdates,
}

/// One input unit for a DUT.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Stimulus {
    Word(u32),
    Updates(Vec<MemoryUpdate>),
}

/// The DUT refused a stimulus; the agent is told it was malformed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StimulusRejected(pub String);

impl fmt::Display for StimulusRejected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stimulus rejected: {}", self.0)
    }
}

impl std::error::Error for StimulusRejected {}

/// Prompt-facing description of a DUT's task.
#[derive(Debug, Clone)]
pub struct TaskProfile {
    pub name: String,
    /// Multi-sentence task introduction.
    pub intro: String,
    /// Single-sentence variant of `intro`.
    pub one_line_intro: String,
    /// Summary of the bin families in the coverage plan.
    pub plan_summary: String,
    pub format: WireFormat,
    /// "What not to do" sentence per bin family, used by the negative
    /// feedback template.
    pub negative_hints: BTreeMap<BinGroup, String>,
}

pub trait Dut {
    fn plan(&self) -> &CoveragePlan;

    fn profile(&self) -> TaskProfile;

    fn wire_format(&self) -> WireFormat {
        self.profile().format
    }

    /// Returns the DUT to its power-on state. Coverage lives outside the DUT.
    fn reset(&mut self);

    /// Feeds one stimulus and appends every bin it hit to `hits`.
    fn apply(&mut self, stimulus: &Stimulus, hits: &mut Vec<BinIndex>) -> Result<(), StimulusRejected>;

    /// DUT-specific feedback for the agent, e.g. the CPU's program counter.
    fn status_line(&self) -> Option<String> {
        None
    }

    /// Program counter for agents that target the current fetch address.
    fn program_counter(&self) -> Option<u32> {
        None
    }
}

/// Builds one of the shipped DUTs with its default coverage plan.
pub fn make_dut(kind: DutKind) -> Result<Box<dyn Dut + Send>> {
    Ok(match kind {
        DutKind::Stride => Box::new(StrideDut::new()?),
        DutKind::Decoder => Box::new(DecoderDut::new()?),
        DutKind::Cpu => Box::new(CpuDut::new()?),
    })
}

/// Plan of a shipped DUT without keeping the model around.
pub fn plan_for(kind: DutKind) -> Result<CoveragePlan> {
    Ok(make_dut(kind)?.plan().clone())
}
