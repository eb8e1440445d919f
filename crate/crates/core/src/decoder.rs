//! RV32I instruction decoder model and its op / register-port / cross monitor.
//!
//! The set of recognized operations and which register ports each one uses
//! come from a versioned JSON table (`data/op_port_table.json`). The coverage
//! plan is derived from the same table, so the two can never disagree.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::coverage::{BinDescriptor, BinGroup, BinIndex, CoveragePlan, Difficulty};
use crate::dut::{Dut, Stimulus, StimulusRejected, TaskProfile, WireFormat};
use crate::error::{Error, Result};
use crate::isa::{Encoding, Format, Instruction, Mnemonic};

pub const SHIPPED_TABLE: &str = include_str!("../data/op_port_table.json");
pub const REGISTERS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    ReadA,
    ReadB,
    Write,
}

impl Port {
    pub const ALL: [Port; 3] = [Port::ReadA, Port::ReadB, Port::Write];

    pub fn as_str(self) -> &'static str {
        match self {
            Port::ReadA => "read_a",
            Port::ReadB => "read_b",
            Port::Write => "write",
        }
    }

    fn slot(self) -> usize {
        match self {
            Port::ReadA => 0,
            Port::ReadB => 1,
            Port::Write => 2,
        }
    }

    fn role(self) -> &'static str {
        match self {
            Port::ReadA => "first source (read port A)",
            Port::ReadB => "second source (read port B)",
            Port::Write => "destination (write port)",
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpPortEntry {
    pub op: Mnemonic,
    pub format: Format,
    pub opcode: u8,
    pub funct3: Option<u8>,
    pub funct7: Option<u8>,
    pub uses_rs1: bool,
    pub uses_rs2: bool,
    pub uses_rd: bool,
    /// Difficulty class of this op's cross bins.
    pub difficulty: Difficulty,
}

impl OpPortEntry {
    pub fn encoding(&self) -> Encoding {
        Encoding {
            format: self.format,
            opcode: self.opcode,
            funct3: self.funct3,
            funct7: self.funct7,
        }
    }

    pub fn uses(&self, port: Port) -> bool {
        match port {
            Port::ReadA => self.uses_rs1,
            Port::ReadB => self.uses_rs2,
            Port::Write => self.uses_rd,
        }
    }

    pub fn port_count(&self) -> usize {
        Port::ALL.iter().filter(|p| self.uses(**p)).count()
    }
}

/// Which ports each supported operation exercises.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpPortTable {
    pub version: u32,
    #[serde(default)]
    pub notes: Vec<String>,
    pub include_x0: bool,
    pub ops: Vec<OpPortEntry>,
}

impl OpPortTable {
    pub fn from_json(text: &str) -> Result<Self> {
        let table: OpPortTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn shipped() -> &'static OpPortTable {
        static TABLE: OnceLock<OpPortTable> = OnceLock::new();
        TABLE.get_or_init(|| OpPortTable::from_json(SHIPPED_TABLE).expect("shipped op/port table is valid"))
    }

    fn validate(&self) -> Result<()> {
        if self.ops.is_empty() {
            return Err(Error::Table("no operations".into()));
        }
        let mut seen = HashSet::new();
        for entry in &self.ops {
            if !seen.insert(entry.op) {
                return Err(Error::Table(format!("{} listed twice", entry.op)));
            }
            if entry.encoding() != entry.op.encoding() {
                return Err(Error::Table(format!("{} has a non-standard encoding", entry.op)));
            }
            let fields = Instruction::from_word(entry.op, 0);
            let consistent = (!entry.uses_rs1 || fields.rs1.is_some())
                && (!entry.uses_rs2 || fields.rs2.is_some())
                && (!entry.uses_rd || fields.rd.is_some());
            if !consistent {
                return Err(Error::Table(format!("{} claims a port its format lacks", entry.op)));
            }
        }
        Ok(())
    }

    pub fn entry(&self, op: Mnemonic) -> Option<&OpPortEntry> {
        self.ops.iter().find(|e| e.op == op)
    }

    pub fn registers(&self) -> std::ops::Range<u8> {
        if self.include_x0 {
            0..REGISTERS as u8
        } else {
            1..REGISTERS as u8
        }
    }

    /// `ops + 3·regs + Σ regs·ports(op)`, computed from the table alone.
    pub fn plan_size(&self) -> usize {
        let regs = self.registers().len();
        self.ops.len() + Port::ALL.len() * regs + self.ops.iter().map(|e| regs * e.port_count()).sum::<usize>()
    }

    /// Decodes a word against the table; anything unlisted is illegal.
    pub fn decode(&self, word: u32) -> DecodeResult {
        let Some(entry) = self.ops.iter().find(|e| e.encoding().matches(word)) else {
            return DecodeResult::illegal(word);
        };
        let inst = Instruction::from_word(entry.op, word);
        let mut ports = Vec::with_capacity(3);
        if entry.uses_rs1 {
            ports.push((inst.rs1.unwrap_or(0), Port::ReadA));
        }
        if entry.uses_rs2 {
            ports.push((inst.rs2.unwrap_or(0), Port::ReadB));
        }
        if entry.uses_rd {
            ports.push((inst.rd.unwrap_or(0), Port::Write));
        }
        DecodeResult {
            word,
            op: Some(entry.op),
            rs1: inst.rs1,
            rs2: inst.rs2,
            rd: inst.rd,
            imm: inst.imm,
            ports,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub word: u32,
    /// `None` means the word is illegal for this decoder.
    pub op: Option<Mnemonic>,
    pub rs1: Option<u8>,
    pub rs2: Option<u8>,
    pub rd: Option<u8>,
    pub imm: Option<i32>,
    pub ports: Vec<(u8, Port)>,
}

impl DecodeResult {
    fn illegal(word: u32) -> Self {
        Self {
            word,
            op: None,
            rs1: None,
            rs2: None,
            rd: None,
            imm: None,
            ports: Vec::new(),
        }
    }

    pub fn is_illegal(&self) -> bool {
        self.op.is_none()
    }
}

impl fmt::Display for DecodeResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            None => write!(f, "illegal (0x{:08x})", self.word),
            Some(op) => Instruction {
                op,
                rd: self.rd,
                rs1: self.rs1,
                rs2: self.rs2,
                imm: self.imm,
            }
            .fmt(f),
        }
    }
}

/// Decodes against the shipped table.
pub fn decode(word: u32) -> DecodeResult {
    OpPortTable::shipped().decode(word)
}

pub fn op_bin_id(op: Mnemonic) -> String {
    format!("op_{}", op.name().to_ascii_lowercase())
}

pub fn port_bin_id(reg: u8, port: Port) -> String {
    format!("port_x{reg:02}_{port}")
}

pub fn cross_bin_id(op: Mnemonic, reg: u8, port: Port) -> String {
    format!("cross_{}_x{reg:02}_{port}", op.name().to_ascii_lowercase())
}

/// Enumerates op, port and valid cross bins for `table`.
pub fn decoder_plan(table: &OpPortTable) -> Result<CoveragePlan> {
    let mut bins = Vec::with_capacity(table.plan_size());
    for entry in &table.ops {
        bins.push(BinDescriptor::new(
            op_bin_id(entry.op),
            format!("An instruction that performs {}.", entry.op),
            Difficulty::Easier,
            BinGroup::AluOp,
        ));
    }
    for reg in table.registers() {
        for port in Port::ALL {
            bins.push(BinDescriptor::new(
                port_bin_id(reg, port),
                format!("An instruction that uses register x{reg} as its {}.", port.role()),
                Difficulty::Easier,
                BinGroup::RegisterPort,
            ));
        }
    }
    for entry in &table.ops {
        for reg in table.registers() {
            for port in Port::ALL.into_iter().filter(|p| entry.uses(*p)) {
                bins.push(BinDescriptor::new(
                    cross_bin_id(entry.op, reg, port),
                    format!("A {} instruction that uses register x{reg} as its {}.", entry.op, port.role()),
                    entry.difficulty,
                    BinGroup::Cross,
                ));
            }
        }
    }
    CoveragePlan::new("decoder", bins)
}

/// Decode → bin lookup.
#[derive(Debug, Clone)]
pub struct DecoderMonitor {
    op_slot: BTreeMap<Mnemonic, usize>,
    op_bins: Vec<BinIndex>,
    port_bins: Vec<Option<BinIndex>>,
    cross_bins: Vec<Option<BinIndex>>,
}

impl DecoderMonitor {
    pub fn new(table: &OpPortTable, plan: &CoveragePlan) -> Result<Self> {
        let mut op_slot = BTreeMap::new();
        let mut op_bins = Vec::new();
        let mut port_bins = vec![None; REGISTERS * 3];
        let mut cross_bins = vec![None; table.ops.len() * REGISTERS * 3];
        for reg in table.registers() {
            for port in Port::ALL {
                port_bins[reg as usize * 3 + port.slot()] = Some(plan.require(&port_bin_id(reg, port))?);
            }
        }
        for (slot, entry) in table.ops.iter().enumerate() {
            op_slot.insert(entry.op, slot);
            op_bins.push(plan.require(&op_bin_id(entry.op))?);
            for reg in table.registers() {
                for port in Port::ALL.into_iter().filter(|p| entry.uses(*p)) {
                    cross_bins[(slot * REGISTERS + reg as usize) * 3 + port.slot()] =
                        Some(plan.require(&cross_bin_id(entry.op, reg, port))?);
                }
            }
        }
        Ok(Self {
            op_slot,
            op_bins,
            port_bins,
            cross_bins,
        })
    }

    /// Op bin, one port bin per used port, one cross bin per valid
    /// (op, register, port). Illegal words hit nothing.
    pub fn bins_for(&self, result: &DecodeResult, out: &mut Vec<BinIndex>) {
        let Some(slot) = result.op.and_then(|op| self.op_slot.get(&op).copied()) else {
            return;
        };
        out.push(self.op_bins[slot]);
        for &(reg, port) in &result.ports {
            if let Some(bin) = self.port_bins[reg as usize * 3 + port.slot()] {
                out.push(bin);
            }
        }
        for &(reg, port) in &result.ports {
            if let Some(bin) = self.cross_bins[(slot * REGISTERS + reg as usize) * 3 + port.slot()] {
                out.push(bin);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecoderDut {
    table: OpPortTable,
    plan: CoveragePlan,
    monitor: DecoderMonitor,
    last: Option<DecodeResult>,
}

impl DecoderDut {
    pub fn new() -> Result<Self> {
        Self::with_table(OpPortTable::shipped().clone())
    }

    pub fn with_table(table: OpPortTable) -> Result<Self> {
        let plan = decoder_plan(&table)?;
        let monitor = DecoderMonitor::new(&table, &plan)?;
        Ok(Self {
            table,
            plan,
            monitor,
            last: None,
        })
    }

    pub fn table(&self) -> &OpPortTable {
        &self.table
    }

    pub fn monitor(&self) -> &DecoderMonitor {
        &self.monitor
    }

    pub fn decode(&self, word: u32) -> DecodeResult {
        self.table.decode(word)
    }

    pub fn feed(&mut self, word: u32, hits: &mut Vec<BinIndex>) {
        let result = self.table.decode(word);
        self.monitor.bins_for(&result, hits);
        self.last = Some(result);
    }
}

impl Dut for DecoderDut {
    fn plan(&self) -> &CoveragePlan {
        &self.plan
    }

    fn profile(&self) -> TaskProfile {
        decoder_profile()
    }

    fn reset(&mut self) {
        self.last = None;
    }

    fn apply(&mut self, stimulus: &Stimulus, hits: &mut Vec<BinIndex>) -> Result<(), StimulusRejected> {
        match stimulus {
            Stimulus::Word(w) => {
                self.feed(*w, hits);
                Ok(())
            }
            Stimulus::Updates(_) => Err(StimulusRejected("the decoder takes one instruction word per stimulus".into())),
        }
    }
}

fn decoder_profile() -> TaskProfile {
    let mut negative_hints = BTreeMap::new();
    negative_hints.insert(
        BinGroup::AluOp,
        "do not emit words whose opcode, funct3 or funct7 fields do not match the operation".to_owned(),
    );
    negative_hints.insert(
        BinGroup::RegisterPort,
        "do not use an instruction format that lacks the requested register field".to_owned(),
    );
    negative_hints.insert(
        BinGroup::Cross,
        "do not put the register in a different field or use a different operation".to_owned(),
    );
    TaskProfile {
        name: "RV32I instruction decoder".to_owned(),
        intro: "You will receive a description of a RISC-V RV32I instruction decoder and a list of coverage \
                bins that it counts. The decoder reads one 32-bit instruction word at a time, identifies the \
                operation, and records which registers are used as first source, second source and \
                destination. Your job is to write instruction words that hit as many uncovered bins as \
                possible. After every answer you will be told which bins are still uncovered."
            .to_owned(),
        one_line_intro: "Write 32-bit RISC-V RV32I instruction words that hit the uncovered decoder bins listed below."
            .to_owned(),
        plan_summary: "- ALU-op bins: an instruction performing one of 26 operations (ADD, SUB, SLL, SLT, SLTU, \
                       XOR, SRL, SRA, OR, AND, ADDI, SLTI, SLTIU, XORI, ORI, ANDI, SLLI, SRLI, SRAI, LB, LH, \
                       LW, LBU, LHU, SB, SW).\n\
                       - Register-port bins: register xN (N = 0..31) used as first source (read_a), second \
                       source (read_b) or destination (write).\n\
                       - Cross bins: a specific operation using a specific register on a specific port, for \
                       every port the operation actually has."
            .to_owned(),
        format: WireFormat::Integers,
        negative_hints,
    }
}
