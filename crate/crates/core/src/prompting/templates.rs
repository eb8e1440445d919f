//! System message, initial query and iterative query texts.
//!
//! Every query is split into `## ` sections so tests can check structure
//! without pinning exact wording.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::coverage::BinDescriptor;
use crate::dut::{TaskProfile, WireFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateVariant {
    #[default]
    Original,
    OneLineIntro,
    NegativeFeedback,
}

/// How the previous response fared, which selects the result-summary branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreviousResult {
    /// Gibberish, or the output format was not followed.
    Malformed,
    NoNewBins,
    Hits(usize),
}

pub fn format_requirement(format: WireFormat) -> &'static str {
    match format {
        WireFormat::Integers => {
            "Answer with exactly one fenced code block (```) that contains only unsigned 32-bit integers, \
             written in decimal or as 0x-prefixed hexadecimal, separated by commas or newlines."
        }
        WireFormat::MemoryUpdates => {
            "Answer with exactly one fenced code block (```) that contains a JSON array with one element per \
             timestep; each element is an array of [address, instruction] pairs, and [] leaves memory \
             unchanged for that timestep. Addresses must be multiples of 4."
        }
    }
}

pub fn system_message(profile: &TaskProfile) -> String {
    format!(
        "You are a hardware verification assistant generating test stimuli for a {}. {} \
         Do not add explanations outside the code block.",
        profile.name,
        format_requirement(profile.format)
    )
}

fn question(profile: &TaskProfile) -> &'static str {
    match profile.format {
        WireFormat::Integers => "Write a list of values that hits as many of these bins as possible.",
        WireFormat::MemoryUpdates => {
            "Write memory updates for the next timesteps that hit as many of these bins as possible."
        }
    }
}

pub fn build_initial_query(profile: &TaskProfile, variant: TemplateVariant) -> String {
    let intro = match variant {
        TemplateVariant::OneLineIntro => &profile.one_line_intro,
        TemplateVariant::Original | TemplateVariant::NegativeFeedback => &profile.intro,
    };
    format!(
        "## Task introduction\n{intro}\n\n## Coverage plan\n{}\n\n## Question\n{} {}",
        profile.plan_summary,
        question(profile),
        format_requirement(profile.format)
    )
}

fn negative_sentence(profile: &TaskProfile, bin: &BinDescriptor) -> String {
    let hint = profile
        .negative_hints
        .get(&bin.group)
        .map(String::as_str)
        .unwrap_or("do not repeat values that already failed to hit it");
    format!("Avoid this for {}: {hint}.", bin.id)
}

/// `status` carries DUT-specific feedback such as the CPU's program counter.
pub fn build_iterative_query(
    profile: &TaskProfile,
    previous: PreviousResult,
    sampled: &[&BinDescriptor],
    variant: TemplateVariant,
    status: Option<&str>,
) -> String {
    let format = format_requirement(profile.format);
    let mut out = String::from("## Result summary\n");
    match previous {
        PreviousResult::Malformed => {
            let _ = write!(
                out,
                "Your previous answer could not be used because it did not follow the required output format. {format}"
            );
        }
        PreviousResult::NoNewBins => {
            out.push_str("Your previous answer did not hit any new bins. Please provide a new list of stimuli.");
        }
        PreviousResult::Hits(n) => {
            let _ = write!(
                out,
                "Your previous answer hit some bins ({n} new). Please provide a new list of stimuli."
            );
        }
    }
    if let Some(status) = status {
        let _ = write!(out, "\n{status}");
    }
    out.push_str("\n\n## Uncovered bins\n");
    for bin in sampled {
        let _ = writeln!(out, "- {}: {}", bin.id, bin.description);
    }
    if variant == TemplateVariant::NegativeFeedback && !sampled.is_empty() {
        out.push_str("\n## What not to do\n");
        for bin in sampled {
            let _ = writeln!(out, "{}", negative_sentence(profile, bin));
        }
    }
    out.push_str("\n## Question\n");
    out.push_str(question(profile));
    if previous == PreviousResult::Malformed {
        let _ = write!(out, " {format}");
    }
    out
}

/// Section headings and listed bin ids: the wording-independent shape of a
/// prompt.
pub fn skeleton(prompt: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut in_bins = false;
    for line in prompt.lines() {
        if line.starts_with("## ") {
            in_bins = line == "## Uncovered bins";
            out.push(line.to_owned());
        } else if let Some((id, _)) = line.strip_prefix("- ").filter(|_| in_bins).and_then(|r| r.split_once(':')) {
            out.push(format!("bin {id}"));
        } else if line.starts_with("Avoid this for ") {
            out.push("avoid".to_owned());
        }
    }
    out
}
