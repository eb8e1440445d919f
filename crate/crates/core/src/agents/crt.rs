//! Constrained-random stimulus generation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cpu::{cpu_ops, MemoryUpdate};
use crate::dut::{DutKind, Stimulus};
use crate::isa::{Format, Instruction, Mnemonic};

/// A valid encoding of one of the CPU's 14 operations with uniformly random
/// operation, registers and immediate.
pub fn random_cpu_word<R: Rng + ?Sized>(rng: &mut R) -> u32 {
    let ops: Vec<Mnemonic> = cpu_ops().collect();
    let op = ops[rng.random_range(0..ops.len())];
    let mut reg = || Some(rng.random_range(0u8..32));
    let (rd, rs1, rs2) = (reg(), reg(), reg());
    let inst = match op.encoding().format {
        Format::R => Instruction { op, rd, rs1, rs2, imm: None },
        Format::S => Instruction { op, rd: None, rs1, rs2, imm: Some(rng.random_range(-2048..2048)) },
        Format::J => Instruction {
            op,
            rd,
            rs1: None,
            rs2: None,
            imm: Some(rng.random_range(-(1 << 19)..(1 << 19)) * 2),
        },
        other => unreachable!("no {other:?} op in the CPU subset"),
    };
    inst.encode()
}

/// One constrained-random stimulus. `pc` is the CPU's current program
/// counter and is ignored for the other DUTs.
pub fn crt_next<R: Rng + ?Sized>(rng: &mut R, kind: DutKind, pc: Option<u32>) -> Stimulus {
    match kind {
        DutKind::Stride | DutKind::Decoder => Stimulus::Word(rng.random()),
        DutKind::Cpu => Stimulus::Updates(vec![MemoryUpdate::new(pc.unwrap_or(0), random_cpu_word(rng))]),
    }
}

#[derive(Debug, Clone)]
pub struct CrtAgent {
    kind: DutKind,
    rng: ChaCha8Rng,
}

impl CrtAgent {
    pub fn new(kind: DutKind, seed: u64) -> Self {
        Self { kind, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next(&mut self, pc: Option<u32>) -> Stimulus {
        crt_next(&mut self.rng, self.kind, pc)
    }
}
