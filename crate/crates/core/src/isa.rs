//! RV32I field extraction and encoding for the instructions the DUTs know.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const OPCODE_OP: u8 = 0b011_0011;
pub const OPCODE_OP_IMM: u8 = 0b001_0011;
pub const OPCODE_LOAD: u8 = 0b000_0011;
pub const OPCODE_STORE: u8 = 0b010_0011;
pub const OPCODE_JAL: u8 = 0b110_1111;

#[inline]
pub fn opcode(word: u32) -> u8 {
    (word & 0x7f) as u8
}

#[inline]
pub fn rd(word: u32) -> u8 {
    ((word >> 7) & 0x1f) as u8
}

#[inline]
pub fn funct3(word: u32) -> u8 {
    ((word >> 12) & 0x7) as u8
}

#[inline]
pub fn rs1(word: u32) -> u8 {
    ((word >> 15) & 0x1f) as u8
}

#[inline]
pub fn rs2(word: u32) -> u8 {
    ((word >> 20) & 0x1f) as u8
}

#[inline]
pub fn funct7(word: u32) -> u8 {
    (word >> 25) as u8
}

#[inline]
pub fn imm_i(word: u32) -> i32 {
    (word as i32) >> 20
}

#[inline]
pub fn imm_s(word: u32) -> i32 {
    (((word as i32) >> 25) << 5) | ((word >> 7) & 0x1f) as i32
}

#[inline]
pub fn imm_j(word: u32) -> i32 {
    let imm20 = ((word as i32) >> 31) << 20;
    let imm10_1 = ((word >> 21) & 0x3ff) << 1;
    let imm11 = ((word >> 20) & 0x1) << 11;
    let imm19_12 = ((word >> 12) & 0xff) << 12;
    imm20 | (imm19_12 | imm11 | imm10_1) as i32
}

pub fn encode_r(opcode: u8, funct3: u8, funct7: u8, rd: u8, rs1: u8, rs2: u8) -> u32 {
    (funct7 as u32) << 25
        | (rs2 as u32 & 0x1f) << 20
        | (rs1 as u32 & 0x1f) << 15
        | (funct3 as u32 & 0x7) << 12
        | (rd as u32 & 0x1f) << 7
        | (opcode as u32 & 0x7f)
}

pub fn encode_i(opcode: u8, funct3: u8, rd: u8, rs1: u8, imm: i32) -> u32 {
    ((imm as u32) & 0xfff) << 20
        | (rs1 as u32 & 0x1f) << 15
        | (funct3 as u32 & 0x7) << 12
        | (rd as u32 & 0x1f) << 7
        | (opcode as u32 & 0x7f)
}

pub fn encode_s(opcode: u8, funct3: u8, rs1: u8, rs2: u8, imm: i32) -> u32 {
    let imm = imm as u32;
    ((imm >> 5) & 0x7f) << 25
        | (rs2 as u32 & 0x1f) << 20
        | (rs1 as u32 & 0x1f) << 15
        | (funct3 as u32 & 0x7) << 12
        | (imm & 0x1f) << 7
        | (opcode as u32 & 0x7f)
}

pub fn encode_j(opcode: u8, rd: u8, imm: i32) -> u32 {
    let imm = imm as u32;
    ((imm >> 20) & 0x1) << 31
        | ((imm >> 1) & 0x3ff) << 21
        | ((imm >> 11) & 0x1) << 20
        | ((imm >> 12) & 0xff) << 12
        | (rd as u32 & 0x1f) << 7
        | (opcode as u32 & 0x7f)
}

/// Instruction layout families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Format {
    R,
    I,
    /// Immediate shifts: I layout with funct7 in the upper immediate bits.
    IShift,
    S,
    J,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mnemonic {
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
    Sb,
    Sh,
    Sw,
    Jal,
}

/// Fixed encoding bits of an instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Encoding {
    pub format: Format,
    pub opcode: u8,
    pub funct3: Option<u8>,
    pub funct7: Option<u8>,
}

impl Mnemonic {
    pub const ALL: [Mnemonic; 28] = [
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
        Mnemonic::Addi,
        Mnemonic::Slti,
        Mnemonic::Sltiu,
        Mnemonic::Xori,
        Mnemonic::Ori,
        Mnemonic::Andi,
        Mnemonic::Slli,
        Mnemonic::Srli,
        Mnemonic::Srai,
        Mnemonic::Lb,
        Mnemonic::Lh,
        Mnemonic::Lw,
        Mnemonic::Lbu,
        Mnemonic::Lhu,
        Mnemonic::Sb,
        Mnemonic::Sh,
        Mnemonic::Sw,
        Mnemonic::Jal,
    ];

    pub fn name(self) -> &'static str {
        use Mnemonic::*;
        match self {
            Add => "ADD",
            Sub => "SUB",
            Sll => "SLL",
            Slt => "SLT",
            Sltu => "SLTU",
            Xor => "XOR",
            Srl => "SRL",
            Sra => "SRA",
            Or => "OR",
            And => "AND",
            Addi => "ADDI",
            Slti => "SLTI",
            Sltiu => "SLTIU",
            Xori => "XORI",
            Ori => "ORI",
            Andi => "ANDI",
            Slli => "SLLI",
            Srli => "SRLI",
            Srai => "SRAI",
            Lb => "LB",
            Lh => "LH",
            Lw => "LW",
            Lbu => "LBU",
            Lhu => "LHU",
            Sb => "SB",
            Sh => "SH",
            Sw => "SW",
            Jal => "JAL",
        }
    }

    /// Canonical RV32I encoding.
    pub fn encoding(self) -> Encoding {
        use Mnemonic::*;
        let r = |funct3: u8, funct7: u8| Encoding {
            format: Format::R,
            opcode: OPCODE_OP,
            funct3: Some(funct3),
            funct7: Some(funct7),
        };
        let i = |opcode: u8, funct3: u8| Encoding {
            format: Format::I,
            opcode,
            funct3: Some(funct3),
            funct7: None,
        };
        let shift = |funct3: u8, funct7: u8| Encoding {
            format: Format::IShift,
            opcode: OPCODE_OP_IMM,
            funct3: Some(funct3),
            funct7: Some(funct7),
        };
        let s = |funct3: u8| Encoding {
            format: Format::S,
            opcode: OPCODE_STORE,
            funct3: Some(funct3),
            funct7: None,
        };
        match self {
            Add => r(0, 0x00),
            Sub => r(0, 0x20),
            Sll => r(1, 0x00),
            Slt => r(2, 0x00),
            Sltu => r(3, 0x00),
            Xor => r(4, 0x00),
            Srl => r(5, 0x00),
            Sra => r(5, 0x20),
            Or => r(6, 0x00),
            And => r(7, 0x00),
            Addi => i(OPCODE_OP_IMM, 0),
            Slti => i(OPCODE_OP_IMM, 2),
            Sltiu => i(OPCODE_OP_IMM, 3),
            Xori => i(OPCODE_OP_IMM, 4),
            Ori => i(OPCODE_OP_IMM, 6),
            Andi => i(OPCODE_OP_IMM, 7),
            Slli => shift(1, 0x00),
            Srli => shift(5, 0x00),
            Srai => shift(5, 0x20),
            Lb => i(OPCODE_LOAD, 0),
            Lh => i(OPCODE_LOAD, 1),
            Lw => i(OPCODE_LOAD, 2),
            Lbu => i(OPCODE_LOAD, 4),
            Lhu => i(OPCODE_LOAD, 5),
            Sb => s(0),
            Sh => s(1),
            Sw => s(2),
            Jal => Encoding {
                format: Format::J,
                opcode: OPCODE_JAL,
                funct3: None,
                funct7: None,
            },
        }
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mnemonic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mnemonic::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mnemonic `{s}`"))
    }
}

impl Encoding {
    /// Whether `word` carries these fixed bits.
    pub fn matches(&self, word: u32) -> bool {
        opcode(word) == self.opcode
            && self.funct3.is_none_or(|f| funct3(word) == f)
            && self.funct7.is_none_or(|f| funct7(word) == f)
    }
}

/// A decoded instruction with the operand fields its format defines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Mnemonic,
    pub rd: Option<u8>,
    pub rs1: Option<u8>,
    pub rs2: Option<u8>,
    pub imm: Option<i32>,
}

impl Instruction {
    /// Extracts the operand fields of `word`, assuming it encodes `op`.
    pub fn from_word(op: Mnemonic, word: u32) -> Self {
        match op.encoding().format {
            Format::R => Self {
                op,
                rd: Some(rd(word)),
                rs1: Some(rs1(word)),
                rs2: Some(rs2(word)),
                imm: None,
            },
            Format::I => Self {
                op,
                rd: Some(rd(word)),
                rs1: Some(rs1(word)),
                rs2: None,
                imm: Some(imm_i(word)),
            },
            Format::IShift => Self {
                op,
                rd: Some(rd(word)),
                rs1: Some(rs1(word)),
                rs2: None,
                imm: Some(rs2(word) as i32),
            },
            Format::S => Self {
                op,
                rd: None,
                rs1: Some(rs1(word)),
                rs2: Some(rs2(word)),
                imm: Some(imm_s(word)),
            },
            Format::J => Self {
                op,
                rd: Some(rd(word)),
                rs1: None,
                rs2: None,
                imm: Some(imm_j(word)),
            },
        }
    }

    /// Assembles the instruction. Missing operands encode as zero.
    pub fn encode(&self) -> u32 {
        let enc = self.op.encoding();
        let rd = self.rd.unwrap_or(0);
        let rs1 = self.rs1.unwrap_or(0);
        let rs2 = self.rs2.unwrap_or(0);
        let imm = self.imm.unwrap_or(0);
        let f3 = enc.funct3.unwrap_or(0);
        match enc.format {
            Format::R => encode_r(enc.opcode, f3, enc.funct7.unwrap_or(0), rd, rs1, rs2),
            Format::I => encode_i(enc.opcode, f3, rd, rs1, imm),
            Format::IShift => encode_r(enc.opcode, f3, enc.funct7.unwrap_or(0), rd, rs1, (imm & 0x1f) as u8),
            Format::S => encode_s(enc.opcode, f3, rs1, rs2, imm),
            Format::J => encode_j(enc.opcode, rd, imm),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = |x: Option<u8>| x.unwrap_or(0);
        let imm = self.imm.unwrap_or(0);
        match self.op.encoding().format {
            Format::R => write!(f, "{} x{}, x{}, x{}", self.op, r(self.rd), r(self.rs1), r(self.rs2)),
            Format::I if self.op.encoding().opcode == OPCODE_LOAD => {
                write!(f, "{} x{}, {}(x{})", self.op, r(self.rd), imm, r(self.rs1))
            }
            Format::I | Format::IShift => write!(f, "{} x{}, x{}, {}", self.op, r(self.rd), r(self.rs1), imm),
            Format::S => write!(f, "{} x{}, {}(x{})", self.op, r(self.rs2), imm, r(self.rs1)),
            Format::J => write!(f, "{} x{}, {}", self.op, r(self.rd), imm),
        }
    }
}
