//! Brute-force reference monitors, written from the bin definitions without
//! reusing the library's classification code.

use proptest::prelude::*;
use serde_json::Value;

use stimloop_core::cpu::{CpuDut, MemoryUpdate};
use stimloop_core::decoder::DecoderDut;
use stimloop_core::stride::StrideDut;
use stimloop_core::Dut;

// ---------- stride ----------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    No,
    Single(i64),
    Double(i64, i64),
    SingleOver(bool),
    DoubleOver(bool, bool),
}

fn wrap_diff(a: u32, b: u32) -> i64 {
    let d = (b as i64 - a as i64).rem_euclid(1 << 32);
    if d >= 1 << 31 {
        d - (1 << 32)
    } else {
        d
    }
}

fn classify(w: &[u32]) -> Class {
    assert_eq!(w.len(), 16);
    let d: Vec<i64> = (0..15).map(|i| wrap_diff(w[i], w[i + 1])).collect();
    let ok = |s: i64| (-16..=15).contains(&s);
    if d.iter().all(|x| *x == d[0]) {
        return if ok(d[0]) { Class::Single(d[0]) } else { Class::SingleOver(d[0] > 0) };
    }
    if (0..15).all(|i| d[i] == d[i % 2]) {
        return match (ok(d[0]), ok(d[1])) {
            (true, true) => Class::Double(d[0], d[1]),
            (false, false) => Class::DoubleOver(d[0] > 0, d[1] > 0),
            _ => Class::No,
        };
    }
    Class::No
}

fn signed2(s: i64) -> String {
    format!("{}{:02}", if s < 0 { '-' } else { '+' }, s.abs())
}

fn pn(pos: bool) -> &'static str {
    if pos {
        "p"
    } else {
        "n"
    }
}

fn class_id(c: Class) -> Option<String> {
    match c {
        Class::No => None,
        Class::Single(s) => Some(format!("single_stride_{}", signed2(s))),
        Class::Double(a, b) => Some(format!("double_stride_{}_{}", signed2(a), signed2(b))),
        Class::SingleOver(p) => Some(format!("single_overflow_{}", if p { "pos" } else { "neg" })),
        Class::DoubleOver(a, b) => Some(format!("double_overflow_{}{}", pn(a), pn(b))),
    }
}

fn family(c: Class) -> u8 {
    match c {
        Class::No => 0,
        Class::Single(_) | Class::SingleOver(_) => 1,
        Class::Double(..) | Class::DoubleOver(..) => 2,
    }
}

/// Bins hit at every input position, from a full rescan of the history.
pub fn brute_stride(values: &[u32]) -> Vec<Vec<String>> {
    (0..values.len())
        .map(|t| {
            let mut ids = Vec::new();
            if t >= 15 {
                let newer = classify(&values[t - 15..=t]);
                ids.extend(class_id(newer));
                if t >= 31 {
                    let older = classify(&values[t - 31..=t - 16]);
                    let name = match (family(older), family(newer)) {
                        (0, 1) => Some("transition_no_to_single"),
                        (0, 2) => Some("transition_no_to_double"),
                        (1, 2) => Some("transition_single_to_double"),
                        (2, 1) => Some("transition_double_to_single"),
                        _ => None,
                    };
                    ids.extend(name.map(str::to_owned));
                }
            }
            ids.sort();
            ids
        })
        .collect()
}

fn stride_value() -> impl Strategy<Value = i32> {
    prop_oneof![4 => -20i32..20, 1 => any::<i32>()]
}

/// Concatenated random, single-stride and double-stride segments.
pub fn stride_sequence() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec((0u8..3, any::<u32>(), stride_value(), stride_value(), 1usize..40), 1..8).prop_map(
        |segments| {
            let mut out: Vec<u32> = Vec::new();
            for (kind, start, a, b, len) in segments {
                let mut last = *out.last().unwrap_or(&start);
                for i in 0..len {
                    let v = match kind {
                        0 => start.wrapping_mul(2_654_435_761).wrapping_add(i as u32 * 40_503),
                        1 => last.wrapping_add(a as u32),
                        _ => last.wrapping_add(if i % 2 == 0 { a } else { b } as u32),
                    };
                    out.push(v);
                    last = v;
                }
            }
            out.truncate(160);
            out
        },
    )
}

pub fn check_stride(values: &[u32]) -> Result<(), String> {
    let expected = brute_stride(values);
    let mut dut = StrideDut::new().map_err(|e| e.to_string())?;
    let mut hits = Vec::new();
    for (t, v) in values.iter().enumerate() {
        hits.clear();
        dut.feed(*v, &mut hits);
        let mut got: Vec<String> = hits.iter().map(|b| dut.plan().id(*b).to_owned()).collect();
        got.sort();
        if got != expected[t] {
            return Err(format!("input {t}: monitor {got:?}, oracle {:?}", expected[t]));
        }
    }
    Ok(())
}

// ---------- CPU ----------

fn r_name(f3: u32, f7: u32) -> Option<&'static str> {
    Some(match (f3, f7) {
        (0, 0) => "add",
        (0, 0x20) => "sub",
        (1, 0) => "sll",
        (2, 0) => "slt",
        (3, 0) => "sltu",
        (4, 0) => "xor",
        (5, 0) => "srl",
        (5, 0x20) => "sra",
        (6, 0) => "or",
        (7, 0) => "and",
        _ => return None,
    })
}

/// (name, destination written, sources read) of an executed word.
type CpuFields = (&'static str, Option<u32>, Option<(u32, u32)>);

fn cpu_fields(w: u32) -> Option<CpuFields> {
    let rd = (w >> 7) & 31;
    let f3 = (w >> 12) & 7;
    let rs1 = (w >> 15) & 31;
    let rs2 = (w >> 20) & 31;
    match w & 0x7f {
        0x33 => Some((r_name(f3, w >> 25)?, Some(rd), Some((rs1, rs2)))),
        0x23 => Some((["sb", "sh", "sw"].get(f3 as usize)?, None, Some((rs1, rs2)))),
        0x6f => Some(("jal", Some(rd), None)),
        _ => None,
    }
}

fn r_word(f3: u32, f7: u32, rd: u32, rs1: u32, rs2: u32) -> u32 {
    f7 << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | rd << 7 | 0x33
}

#[derive(Debug, Clone)]
pub struct CpuStep {
    pub write_at_pc: bool,
    pub word: u32,
    pub extra: Option<(u32, u32)>,
}

fn cpu_word() -> impl Strategy<Value = u32> {
    const R: [(u32, u32); 10] = [(0, 0), (0, 32), (1, 0), (2, 0), (3, 0), (4, 0), (5, 0), (5, 32), (6, 0), (7, 0)];
    let reg = || 0u32..5;
    prop_oneof![
        6 => (0usize..10, reg(), reg(), reg()).prop_map(|(i, rd, a, b)| r_word(R[i].0, R[i].1, rd, a, b)),
        2 => (0u32..3, reg(), reg(), -8i32..8).prop_map(|(f3, a, b, imm)| {
            let imm = imm as u32 & 0xfff;
            (imm >> 5) << 25 | b << 20 | a << 15 | f3 << 12 | (imm & 31) << 7 | 0x23
        }),
        2 => (reg(), -6i32..6).prop_map(|(rd, half)| {
            let imm = (half * 2) as u32 & 0x1f_ffff;
            (imm >> 20 & 1) << 31 | (imm >> 1 & 0x3ff) << 21 | (imm >> 11 & 1) << 20 | (imm >> 12 & 0xff) << 12 | rd << 7 | 0x6f
        }),
        1 => any::<u32>(),
    ]
}

pub fn cpu_program() -> impl Strategy<Value = Vec<CpuStep>> {
    prop::collection::vec(
        (prop::bool::weighted(0.85), cpu_word(), prop::option::of((0u32..16, cpu_word()))).prop_map(
            |(write_at_pc, word, extra)| CpuStep { write_at_pc, word, extra: extra.map(|(slot, w)| (slot * 4, w)) },
        ),
        1..60,
    )
}

pub fn check_cpu_hazards(program: &[CpuStep]) -> Result<(), String> {
    let mut dut = CpuDut::new().map_err(|e| e.to_string())?;
    let mut hits = Vec::new();
    let mut trace: Vec<Option<u32>> = Vec::new();
    let mut monitor: Vec<Vec<String>> = Vec::new();
    for step in program {
        let pc = dut.state().pc;
        let mut updates = Vec::new();
        if let Some((addr, w)) = step.extra {
            updates.push(MemoryUpdate::new(addr, w));
        }
        if step.write_at_pc {
            updates.push(MemoryUpdate::new(pc, step.word));
        }
        hits.clear();
        let outcome = dut.timestep(&updates, &mut hits).map_err(|e| e.to_string())?;
        trace.push(outcome.executed.map(|_| outcome.word));
        let mut ids: Vec<String> = hits
            .iter()
            .map(|b| dut.plan().id(*b).to_owned())
            .filter(|id| id.starts_with("hazard_"))
            .collect();
        ids.sort();
        monitor.push(ids);
    }
    for k in 0..trace.len() {
        let mut expected = Vec::new();
        if k > 0 {
            if let (Some(w0), Some(w1)) = (trace[k - 1], trace[k]) {
                let (n0, dst, _) = cpu_fields(w0).ok_or("executed word outside the subset")?;
                let (n1, _, src) = cpu_fields(w1).ok_or("executed word outside the subset")?;
                if let (Some(rd), Some((a, b))) = (dst, src) {
                    if rd != 0 && (a == rd || b == rd) {
                        expected.push(format!("hazard_{n0}_{n1}"));
                    }
                }
            }
        }
        if monitor[k] != expected {
            return Err(format!("step {k}: monitor {:?}, oracle {expected:?}", monitor[k]));
        }
    }
    Ok(())
}

// ---------- decoder ----------

/// (name, opcode, funct3, funct7, ports in read_a/read_b/write order)
type TableRow = (String, u32, u32, Option<u32>, [bool; 3]);

pub struct TableOracle {
    include_x0: bool,
    ops: Vec<TableRow>,
}

impl TableOracle {
    pub fn load() -> Self {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/op_port_table.json");
        let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let ops = v["ops"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| {
                (
                    e["op"].as_str().unwrap().to_ascii_lowercase(),
                    e["opcode"].as_u64().unwrap() as u32,
                    e["funct3"].as_u64().unwrap() as u32,
                    e.get("funct7").and_then(Value::as_u64).map(|x| x as u32),
                    [
                        e["uses_rs1"].as_bool().unwrap(),
                        e["uses_rs2"].as_bool().unwrap(),
                        e["uses_rd"].as_bool().unwrap(),
                    ],
                )
            })
            .collect();
        Self { include_x0: v["include_x0"].as_bool().unwrap(), ops }
    }

    /// Every bin id the word should hit, by matching it against each row.
    pub fn expand(&self, w: u32) -> Vec<String> {
        let regs = [(w >> 15) & 31, (w >> 20) & 31, (w >> 7) & 31];
        let ports = ["read_a", "read_b", "write"];
        let mut out = Vec::new();
        for (name, opcode, f3, f7, uses) in &self.ops {
            if w & 0x7f != *opcode || (w >> 12) & 7 != *f3 || f7.is_some_and(|f| w >> 25 != f) {
                continue;
            }
            out.push(format!("op_{name}"));
            for i in 0..3 {
                if uses[i] && (self.include_x0 || regs[i] != 0) {
                    out.push(format!("port_x{:02}_{}", regs[i], ports[i]));
                    out.push(format!("cross_{name}_x{:02}_{}", regs[i], ports[i]));
                }
            }
        }
        out.sort();
        out
    }

    pub fn rows(&self) -> usize {
        self.ops.len()
    }

    /// Op bins, plus one port bin per register and port, plus one cross bin
    /// per register for every port each op uses.
    pub fn plan_size(&self) -> usize {
        let regs = if self.include_x0 { 32 } else { 31 };
        let used: usize = self.ops.iter().map(|op| op.4.iter().filter(|u| **u).count()).sum();
        self.ops.len() + 3 * regs + regs * used
    }

    /// A word matching row `i` with the given register fields and noise in
    /// the immediate bits the row does not pin.
    pub fn word_for(&self, i: usize, rd: u32, rs1: u32, rs2: u32, noise: u32) -> u32 {
        let (_, opcode, f3, f7, _) = &self.ops[i];
        let mut w = (noise & 0xfe00_0000) | rs2 << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opcode;
        if let Some(f7) = f7 {
            w = (w & 0x01ff_ffff) | f7 << 25;
        }
        w
    }
}

pub fn decoder_word(rows: usize) -> impl Strategy<Value = (usize, u32, u32, u32, u32, u32, bool)> {
    (0..rows, 0u32..32, 0u32..32, 0u32..32, any::<u32>(), any::<u32>(), prop::bool::weighted(0.8))
}

pub fn check_decoder(oracle: &TableOracle, dut: &DecoderDut, w: u32) -> Result<(), String> {
    let mut hits = Vec::new();
    dut.monitor().bins_for(&dut.decode(w), &mut hits);
    let mut got: Vec<String> = hits.iter().map(|b| dut.plan().id(*b).to_owned()).collect();
    got.sort();
    let expected = oracle.expand(w);
    if got == expected {
        Ok(())
    } else {
        Err(format!("word 0x{w:08x}: monitor {got:?}, oracle {expected:?}"))
    }
}
