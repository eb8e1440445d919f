//! Minimal RV32 CPU with a writable instruction memory and the 196-bin
//! operation / jump / read-after-write hazard monitor.
//!
//! Each timestep the agent supplies a (possibly empty) list of instruction
//! memory updates, then the CPU executes exactly one instruction at `pc`.
//! Only ten R-type ALU ops, SB/SH/SW and JAL are understood; every other word,
//! including unwritten memory, executes as a NOP.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::coverage::{BinDescriptor, BinGroup, BinIndex, CoveragePlan, Difficulty};
use crate::dut::{Dut, Stimulus, StimulusRejected, TaskProfile, WireFormat};
use crate::error::Result;
use crate::isa::{Format, Instruction, Mnemonic};

pub const R_OPS: [Mnemonic; 10] = [
    Mnemonic::Add,
    Mnemonic::Sub,
    Mnemonic::Sll,
    Mnemonic::Slt,
    Mnemonic::Sltu,
    Mnemonic::Xor,
    Mnemonic::Srl,
    Mnemonic::Sra,
    Mnemonic::Or,
    Mnemonic::And,
];
pub const S_OPS: [Mnemonic; 3] = [Mnemonic::Sb, Mnemonic::Sh, Mnemonic::Sw];

/// The 14 operations the CPU executes.
pub fn cpu_ops() -> impl Iterator<Item = Mnemonic> {
    R_OPS.into_iter().chain(S_OPS).chain(std::iter::once(Mnemonic::Jal))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MemoryUpdate {
    pub address: u32,
    pub instruction: u32,
}

impl MemoryUpdate {
    pub fn new(address: u32, instruction: u32) -> Self {
        Self { address, instruction }
    }
}

/// Decodes `word` against the CPU's 14-op subset.
pub fn cpu_decode(word: u32) -> Option<Instruction> {
    cpu_ops()
        .find(|op| op.encoding().matches(word))
        .map(|op| Instruction::from_word(op, word))
}

fn writes_rd(inst: &Instruction) -> Option<u8> {
    match inst.op.encoding().format {
        Format::R | Format::J => inst.rd,
        _ => None,
    }
}

fn sources(inst: &Instruction) -> Option<(u8, u8)> {
    match inst.op.encoding().format {
        Format::R | Format::S => Some((inst.rs1?, inst.rs2?)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpDirection {
    Forward,
    Backward,
}

impl JumpDirection {
    /// Offset 0 (jump to self) counts as forward.
    pub fn of(offset: i32) -> Self {
        if offset >= 0 {
            JumpDirection::Forward
        } else {
            JumpDirection::Backward
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CpuBin {
    Seen(Mnemonic),
    ZeroDst(Mnemonic),
    ZeroSrc(Mnemonic),
    SameSrc(Mnemonic),
    JumpForward,
    JumpBackward,
    /// Writer, reader.
    Hazard(Mnemonic, Mnemonic),
}

impl CpuBin {
    pub fn id(self) -> String {
        let lc = |m: Mnemonic| m.name().to_ascii_lowercase();
        match self {
            CpuBin::Seen(m) => format!("op_{}_seen", lc(m)),
            CpuBin::ZeroDst(m) => format!("op_{}_zero_dst", lc(m)),
            CpuBin::ZeroSrc(m) => format!("op_{}_zero_src", lc(m)),
            CpuBin::SameSrc(m) => format!("op_{}_same_src", lc(m)),
            CpuBin::JumpForward => "jump_forward".to_owned(),
            CpuBin::JumpBackward => "jump_backward".to_owned(),
            CpuBin::Hazard(w, r) => format!("hazard_{}_{}", lc(w), lc(r)),
        }
    }

    fn describe(self) -> (String, Difficulty, BinGroup) {
        match self {
            CpuBin::Seen(m) => (format!("Execute a {m} instruction."), Difficulty::Easier, BinGroup::Operation),
            CpuBin::ZeroDst(m) => (
                format!("Execute a {m} instruction whose destination register is x0."),
                Difficulty::Harder,
                BinGroup::Operation,
            ),
            CpuBin::ZeroSrc(m) => (
                format!("Execute a {m} instruction with x0 as one of its source registers."),
                Difficulty::Harder,
                BinGroup::Operation,
            ),
            CpuBin::SameSrc(m) => (
                format!("Execute a {m} instruction whose two source registers are the same register."),
                Difficulty::Harder,
                BinGroup::Operation,
            ),
            CpuBin::JumpForward => (
                "Execute a JAL with a non-negative offset (forward jump).".to_owned(),
                Difficulty::Harder,
                BinGroup::Jump,
            ),
            CpuBin::JumpBackward => (
                "Execute a JAL with a negative offset (backward jump).".to_owned(),
                Difficulty::Harder,
                BinGroup::Jump,
            ),
            CpuBin::Hazard(w, r) => (
                format!(
                    "Execute a {w} that writes a register (not x0), immediately followed by a {r} that reads that register."
                ),
                Difficulty::Harder,
                BinGroup::Hazard,
            ),
        }
    }
}

/// Every bin in the CPU plan.
pub fn cpu_bin_universe() -> Vec<CpuBin> {
    let mut bins = Vec::with_capacity(196);
    for op in R_OPS {
        bins.extend([CpuBin::Seen(op), CpuBin::ZeroDst(op), CpuBin::ZeroSrc(op), CpuBin::SameSrc(op)]);
    }
    for op in S_OPS {
        bins.extend([CpuBin::Seen(op), CpuBin::ZeroSrc(op), CpuBin::SameSrc(op)]);
    }
    bins.extend([CpuBin::Seen(Mnemonic::Jal), CpuBin::ZeroDst(Mnemonic::Jal)]);
    bins.extend([CpuBin::JumpForward, CpuBin::JumpBackward]);
    let writers = R_OPS.into_iter().chain(std::iter::once(Mnemonic::Jal));
    for w in writers {
        for r in R_OPS.into_iter().chain(S_OPS) {
            bins.push(CpuBin::Hazard(w, r));
        }
    }
    bins
}

pub fn cpu_plan() -> Result<CoveragePlan> {
    let bins = cpu_bin_universe()
        .into_iter()
        .map(|b| {
            let (text, difficulty, group) = b.describe();
            BinDescriptor::new(b.id(), text, difficulty, group)
        })
        .collect();
    CoveragePlan::new("cpu", bins)
}

/// Bins hit by executing `cur` right after `prev`. `None` stands for a NOP.
pub fn cpu_bins_for(prev: Option<&Instruction>, cur: Option<&Instruction>, jump: Option<JumpDirection>) -> Vec<CpuBin> {
    let mut out = Vec::new();
    let Some(cur) = cur else {
        return out;
    };
    let op = cur.op;
    out.push(CpuBin::Seen(op));
    if writes_rd(cur) == Some(0) {
        out.push(CpuBin::ZeroDst(op));
    }
    if let Some((a, b)) = sources(cur) {
        if a == 0 || b == 0 {
            out.push(CpuBin::ZeroSrc(op));
        }
        if a == b {
            out.push(CpuBin::SameSrc(op));
        }
    }
    match jump {
        Some(JumpDirection::Forward) => out.push(CpuBin::JumpForward),
        Some(JumpDirection::Backward) => out.push(CpuBin::JumpBackward),
        None => {}
    }
    if let (Some(prev), Some((a, b))) = (prev, sources(cur)) {
        if let Some(w) = writes_rd(prev) {
            if w != 0 && (a == w || b == w) {
                out.push(CpuBin::Hazard(prev.op, op));
            }
        }
    }
    out
}

/// Architectural state.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CpuState {
    pub pc: u32,
    regs: [u32; 32],
    imem: HashMap<u32, u32>,
    dmem: HashMap<u32, u8>,
}

/// Result of one executed timestep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub pc_before: u32,
    pub pc_after: u32,
    pub word: u32,
    /// `None` when the word executed as a NOP.
    pub executed: Option<Instruction>,
    pub jump: Option<JumpDirection>,
}

impl CpuState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reg(&self, index: u8) -> u32 {
        self.regs[index as usize & 31]
    }

    pub fn regs(&self) -> &[u32; 32] {
        &self.regs
    }

    pub fn imem(&self, address: u32) -> Option<u32> {
        self.imem.get(&address).copied()
    }

    pub fn load_byte(&self, address: u32) -> u8 {
        self.dmem.get(&address).copied().unwrap_or(0)
    }

    fn set_reg(&mut self, index: u8, value: u32) {
        if index != 0 {
            self.regs[index as usize] = value;
        }
    }

    /// Writes instruction memory in list order. Any misaligned address
    /// rejects the whole list and leaves memory untouched.
    pub fn apply_updates(&mut self, updates: &[MemoryUpdate]) -> Result<(), StimulusRejected> {
        if let Some(bad) = updates.iter().find(|u| u.address % 4 != 0) {
            return Err(StimulusRejected(format!(
                "address 0x{:08x} is not word-aligned",
                bad.address
            )));
        }
        for u in updates {
            self.imem.insert(u.address, u.instruction);
        }
        Ok(())
    }

    /// Executes the instruction at `pc`.
    pub fn step(&mut self) -> StepOutcome {
        let pc = self.pc;
        let word = self.imem.get(&pc).copied().unwrap_or(0);
        let mut executed = cpu_decode(word);
        let mut jump = None;
        let mut next = pc.wrapping_add(4);
        if let Some(inst) = executed {
            let rs1 = self.reg(inst.rs1.unwrap_or(0));
            let rs2 = self.reg(inst.rs2.unwrap_or(0));
            let rd = inst.rd.unwrap_or(0);
            let imm = inst.imm.unwrap_or(0);
            use Mnemonic::*;
            match inst.op {
                Add => self.set_reg(rd, rs1.wrapping_add(rs2)),
                Sub => self.set_reg(rd, rs1.wrapping_sub(rs2)),
                Sll => self.set_reg(rd, rs1 << (rs2 & 0x1f)),
                Slt => self.set_reg(rd, ((rs1 as i32) < (rs2 as i32)) as u32),
                Sltu => self.set_reg(rd, (rs1 < rs2) as u32),
                Xor => self.set_reg(rd, rs1 ^ rs2),
                Srl => self.set_reg(rd, rs1 >> (rs2 & 0x1f)),
                Sra => self.set_reg(rd, ((rs1 as i32) >> (rs2 & 0x1f)) as u32),
                Or => self.set_reg(rd, rs1 | rs2),
                And => self.set_reg(rd, rs1 & rs2),
                Sb | Sh | Sw => {
                    let addr = rs1.wrapping_add(imm as u32);
                    let width = match inst.op {
                        Sb => 1,
                        Sh => 2,
                        _ => 4,
                    };
                    for (i, byte) in rs2.to_le_bytes().into_iter().take(width).enumerate() {
                        self.dmem.insert(addr.wrapping_add(i as u32), byte);
                    }
                }
                Jal => {
                    let target = pc.wrapping_add(imm as u32);
                    if target.is_multiple_of(4) {
                        self.set_reg(rd, pc.wrapping_add(4));
                        next = target;
                        jump = Some(JumpDirection::of(imm));
                    } else {
                        // Misaligned target: no C extension, so the jump does not retire.
                        executed = None;
                    }
                }
                _ => unreachable!("cpu_decode only yields the 14 supported ops"),
            }
        }
        self.pc = next;
        StepOutcome {
            pc_before: pc,
            pc_after: next,
            word,
            executed,
            jump,
        }
    }
}

/// What the agent sees after a timestep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpuFeedback {
    pub delta: usize,
    pub pc: u32,
    pub last_word: u32,
    pub last_executed: Option<Instruction>,
}

pub struct CpuDut {
    plan: CoveragePlan,
    lookup: HashMap<CpuBin, BinIndex>,
    state: CpuState,
    prev: Option<Instruction>,
    last: Option<StepOutcome>,
}

impl CpuDut {
    pub fn new() -> Result<Self> {
        let plan = cpu_plan()?;
        let lookup = cpu_bin_universe()
            .into_iter()
            .map(|b| Ok((b, plan.require(&b.id())?)))
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(Self {
            plan,
            lookup,
            state: CpuState::new(),
            prev: None,
            last: None,
        })
    }

    pub fn state(&self) -> &CpuState {
        &self.state
    }

    pub fn last_step(&self) -> Option<&StepOutcome> {
        self.last.as_ref()
    }

    /// Applies updates, executes one instruction and reports the bins hit.
    pub fn timestep(&mut self, updates: &[MemoryUpdate], hits: &mut Vec<BinIndex>) -> Result<StepOutcome, StimulusRejected> {
        self.state.apply_updates(updates)?;
        let outcome = self.state.step();
        for bin in cpu_bins_for(self.prev.as_ref(), outcome.executed.as_ref(), outcome.jump) {
            hits.push(self.lookup[&bin]);
        }
        self.prev = outcome.executed;
        self.last = Some(outcome.clone());
        Ok(outcome)
    }
}

impl Dut for CpuDut {
    fn plan(&self) -> &CoveragePlan {
        &self.plan
    }

    fn profile(&self) -> TaskProfile {
        cpu_profile()
    }

    fn reset(&mut self) {
        self.state = CpuState::new();
        self.prev = None;
        self.last = None;
    }

    fn apply(&mut self, stimulus: &Stimulus, hits: &mut Vec<BinIndex>) -> Result<(), StimulusRejected> {
        match stimulus {
            Stimulus::Updates(updates) => self.timestep(updates, hits).map(|_| ()),
            Stimulus::Word(_) => Err(StimulusRejected(
                "the CPU takes a list of [address, instruction] updates per timestep".into(),
            )),
        }
    }

    fn status_line(&self) -> Option<String> {
        let pc = self.state.pc;
        Some(match &self.last {
            None => format!("Current PC: 0x{pc:08x}. No instruction has been executed yet."),
            Some(step) => {
                let text = match &step.executed {
                    Some(inst) => inst.to_string(),
                    None => "NOP (unsupported or empty word)".to_owned(),
                };
                format!(
                    "Current PC: 0x{pc:08x}. Last executed instruction: 0x{:08x} at 0x{:08x} ({text}).",
                    step.word, step.pc_before
                )
            }
        })
    }

    fn program_counter(&self) -> Option<u32> {
        Some(self.state.pc)
    }
}

impl fmt::Debug for CpuDut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CpuDut").field("state", &self.state).finish_non_exhaustive()
    }
}

fn cpu_profile() -> TaskProfile {
    let mut negative_hints = BTreeMap::new();
    negative_hints.insert(
        BinGroup::Operation,
        "do not write the instruction to an address other than the one the PC will execute next".to_owned(),
    );
    negative_hints.insert(
        BinGroup::Jump,
        "do not use a JAL offset that is not a multiple of 4".to_owned(),
    );
    negative_hints.insert(
        BinGroup::Hazard,
        "do not separate the writing and the reading instruction by any other executed instruction".to_owned(),
    );
    TaskProfile {
        name: "RV32 CPU".to_owned(),
        intro: "You will receive a description of a small RISC-V CPU and a list of coverage bins that it \
                counts. In every timestep you may change the instruction memory with a list of \
                (address, instruction) updates, which can be empty; the CPU then executes exactly one \
                instruction at its program counter. It supports ADD, SUB, SLL, SLT, SLTU, XOR, SRL, SRA, \
                OR, AND, SB, SH, SW and JAL; anything else, including unwritten memory, runs as a NOP. \
                After every answer you will be told the current PC, the last executed instruction and \
                which bins are still uncovered."
            .to_owned(),
        one_line_intro: "Write instruction-memory updates for a small RV32 CPU so that the instructions it \
                         executes hit the uncovered bins listed below."
            .to_owned(),
        plan_summary: "- Operation bins: for each supported operation, seen; zero_dst (destination x0, where \
                       the op has a destination); zero_src (a source register is x0, where the op has \
                       sources); same_src (both sources are the same register).\n\
                       - Jump bins: JAL with a forward or backward offset.\n\
                       - Hazard bins: an instruction writing a register (not x0) immediately followed by an \
                       instruction reading that register, for every writer/reader operation pair."
            .to_owned(),
        format: WireFormat::MemoryUpdates,
        negative_hints,
    }
}
