//! Pulls stimuli out of free-form LLM responses.

use serde_json::Value;

use crate::cpu::MemoryUpdate;
use crate::dut::{Stimulus, WireFormat};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExtractionResult {
    pub stimuli: Vec<Stimulus>,
    /// The response followed the requested fenced-block format.
    pub well_formed: bool,
    /// Mostly prose with no usable numbers; implies `stimuli` is empty.
    pub gibberish: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// Minimum share of integer tokens for an unfenced response to count as
    /// an attempt rather than gibberish.
    pub gibberish_ratio: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { gibberish_ratio: 0.2 }
    }
}

pub fn extract_stimuli(text: &str, format: WireFormat) -> ExtractionResult {
    extract_stimuli_with(text, format, ExtractOptions::default())
}

pub fn extract_stimuli_with(text: &str, format: WireFormat, options: ExtractOptions) -> ExtractionResult {
    let blocks = fenced_blocks(text);
    if blocks.is_empty() {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let ints = tokens.iter().filter(|t| parse_int(trim_punct(t)).is_some()).count();
        if tokens.is_empty() || (ints as f64) < options.gibberish_ratio * tokens.len() as f64 {
            return ExtractionResult { stimuli: Vec::new(), well_formed: false, gibberish: true };
        }
        let stimuli = match format {
            WireFormat::Integers => tokens
                .iter()
                .filter_map(|t| parse_int(trim_punct(t)))
                .map(Stimulus::Word)
                .collect(),
            WireFormat::MemoryUpdates => bracketed(text).and_then(parse_updates).unwrap_or_default(),
        };
        return ExtractionResult { stimuli, well_formed: false, gibberish: false };
    }
    let mut stimuli = Vec::new();
    let mut well_formed = true;
    for block in blocks {
        match format {
            WireFormat::Integers => {
                for token in block.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
                    match parse_int(token) {
                        Some(v) => stimuli.push(Stimulus::Word(v)),
                        None => well_formed = false,
                    }
                }
            }
            WireFormat::MemoryUpdates => match parse_updates(block.trim()) {
                Some(s) => stimuli.extend(s),
                None => well_formed = false,
            },
        }
    }
    ExtractionResult { stimuli, well_formed, gibberish: false }
}

/// Contents of every ``` fenced block, minus an optional language tag.
fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let Some(close) = after.find("```") else { break };
        let mut body = &after[..close];
        if let Some((first, tail)) = body.split_once('\n') {
            let tag = first.trim();
            if !tag.is_empty() && tag.chars().all(|c| c.is_ascii_alphabetic()) {
                body = tail;
            }
        }
        out.push(body);
        rest = &after[close + 3..];
    }
    out
}

fn trim_punct(token: &str) -> &str {
    token.trim_matches(|c: char| matches!(c, ',' | '.' | ';' | ':' | '(' | ')' | '[' | ']' | '"' | '\''))
}

fn mask(v: i128) -> u32 {
    (v & 0xffff_ffff) as u32
}

/// Decimal or 0x-hex, optionally negative, masked to 32 bits.
fn parse_int(token: &str) -> Option<u32> {
    let (neg, body) = match token.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, token.strip_prefix('+').unwrap_or(token)),
    };
    let magnitude = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        u128::from_str_radix(hex, 16).ok()?
    } else if !body.is_empty() && body.bytes().all(|b| b.is_ascii_digit()) {
        body.parse::<u128>().ok()?
    } else {
        return None;
    };
    let v = (magnitude & 0xffff_ffff_ffff_ffff) as i128;
    Some(mask(if neg { -v } else { v }))
}

fn bracketed(text: &str) -> Option<&str> {
    let start = text.find('[')?;
    let end = text.rfind(']')?;
    (end > start).then(|| &text[start..=end])
}

fn json_u32(v: &Value) -> Option<u32> {
    match v {
        Value::Number(n) => n.as_i64().map(|i| mask(i as i128)).or_else(|| n.as_u64().map(|u| mask(u as i128))),
        Value::String(s) => parse_int(s.trim()),
        _ => None,
    }
}

fn pair(v: &Value) -> Option<MemoryUpdate> {
    match v.as_array()?.as_slice() {
        [a, i] => Some(MemoryUpdate::new(json_u32(a)?, json_u32(i)?)),
        _ => None,
    }
}

fn timestep(v: &Value) -> Option<Stimulus> {
    v.as_array()?.iter().map(pair).collect::<Option<Vec<_>>>().map(Stimulus::Updates)
}

/// `[[a, i], ...]` is one timestep; `[[[a, i], ...], [], ...]` is several;
/// `[]` is a single timestep without updates.
fn parse_updates(text: &str) -> Option<Vec<Stimulus>> {
    let value: Value = serde_json::from_str(text).ok()?;
    let items = value.as_array()?;
    let single = match items.first() {
        None => true,
        Some(first) => pair(first).is_some(),
    };
    if single {
        timestep(&value).map(|s| vec![s])
    } else {
        items.iter().map(timestep).collect()
    }
}
