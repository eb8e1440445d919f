//! Behavioral model of a stride-pattern detector and its 1034-bin monitor.
//!
//! The detector sees a stream of 32-bit integers. After every input the
//! newest 16 values are classified; once 32 values are buffered, the two
//! adjacent 16-windows ending at the current input also feed the transition
//! bins. Differences are wrapping two's-complement subtractions, so a stride
//! is "in range" when it lies in `[-16, 15]` and "overflows" otherwise.

use std::collections::{BTreeMap, VecDeque};

use crate::coverage::{BinDescriptor, BinGroup, BinIndex, CoveragePlan, Difficulty};
use crate::dut::{Dut, Stimulus, StimulusRejected, TaskProfile, WireFormat};
use crate::error::{Error, Result};

pub const WINDOW: usize = 16;
pub const HISTORY: usize = 2 * WINDOW;
pub const STRIDE_MIN: i32 = -16;
pub const STRIDE_MAX: i32 = 15;
const STRIDES: usize = (STRIDE_MAX - STRIDE_MIN + 1) as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    fn of(stride: i32) -> Self {
        if stride > STRIDE_MAX {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    fn letter(self) -> char {
        match self {
            Sign::Pos => 'p',
            Sign::Neg => 'n',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternClass {
    None,
    Single(i32),
    /// First difference, second difference.
    Double(i32, i32),
    SingleOverflow(Sign),
    DoubleOverflow(Sign, Sign),
}

impl PatternClass {
    fn is_single(self) -> bool {
        matches!(self, PatternClass::Single(_) | PatternClass::SingleOverflow(_))
    }

    fn is_double(self) -> bool {
        matches!(self, PatternClass::Double(..) | PatternClass::DoubleOverflow(..))
    }
}

fn in_range(stride: i32) -> bool {
    (STRIDE_MIN..=STRIDE_MAX).contains(&stride)
}

/// Classifies exactly 16 values.
pub fn classify_window(values: &[u32]) -> Result<PatternClass> {
    if values.len() != WINDOW {
        return Err(Error::WindowLength(values.len()));
    }
    let mut diffs = [0i32; WINDOW - 1];
    for (d, pair) in diffs.iter_mut().zip(values.windows(2)) {
        *d = pair[1].wrapping_sub(pair[0]) as i32;
    }

    let first = diffs[0];
    if diffs.iter().all(|&d| d == first) {
        return Ok(if in_range(first) {
            PatternClass::Single(first)
        } else {
            PatternClass::SingleOverflow(Sign::of(first))
        });
    }

    let second = diffs[1];
    let alternating = diffs
        .iter()
        .enumerate()
        .all(|(i, &d)| d == if i % 2 == 0 { first } else { second });
    if !alternating {
        return Ok(PatternClass::None);
    }
    Ok(match (in_range(first), in_range(second)) {
        (true, true) => PatternClass::Double(first, second),
        (false, false) => PatternClass::DoubleOverflow(Sign::of(first), Sign::of(second)),
        // One stride in range, one out: no bin describes this pattern.
        _ => PatternClass::None,
    })
}

fn stride_slot(stride: i32) -> usize {
    (stride - STRIDE_MIN) as usize
}

pub fn single_bin_id(stride: i32) -> String {
    format!("single_stride_{stride:+03}")
}

pub fn double_bin_id(first: i32, second: i32) -> String {
    format!("double_stride_{first:+03}_{second:+03}")
}

pub fn single_overflow_bin_id(sign: Sign) -> String {
    match sign {
        Sign::Pos => "single_overflow_pos".to_owned(),
        Sign::Neg => "single_overflow_neg".to_owned(),
    }
}

pub fn double_overflow_bin_id(first: Sign, second: Sign) -> String {
    format!("double_overflow_{}{}", first.letter(), second.letter())
}

pub const TRANSITION_IDS: [&str; 4] = [
    "transition_no_to_single",
    "transition_no_to_double",
    "transition_single_to_double",
    "transition_double_to_single",
];

/// Enumerates the 1034-bin stride plan.
pub fn stride_plan() -> Result<CoveragePlan> {
    let mut bins = Vec::with_capacity(1034);
    for c in STRIDE_MIN..=STRIDE_MAX {
        bins.push(BinDescriptor::new(
            single_bin_id(c),
            format!("16 consecutive integers where every difference a[i+1] - a[i] equals {c}."),
            Difficulty::Easier,
            BinGroup::SingleStride,
        ));
    }
    for c1 in STRIDE_MIN..=STRIDE_MAX {
        for c2 in STRIDE_MIN..=STRIDE_MAX {
            if c1 == c2 {
                continue;
            }
            bins.push(BinDescriptor::new(
                double_bin_id(c1, c2),
                format!(
                    "16 consecutive integers whose differences alternate {c1}, {c2}, {c1}, {c2}, ... \
                     (a[1] - a[0] = {c1}, a[2] - a[1] = {c2})."
                ),
                Difficulty::Harder,
                BinGroup::DoubleStride,
            ));
        }
    }
    for (sign, word) in [(Sign::Pos, "greater than 15"), (Sign::Neg, "less than -16")] {
        bins.push(BinDescriptor::new(
            single_overflow_bin_id(sign),
            format!("16 consecutive integers with one constant difference {word}."),
            Difficulty::Harder,
            BinGroup::Overflow,
        ));
    }
    for first in [Sign::Pos, Sign::Neg] {
        for second in [Sign::Pos, Sign::Neg] {
            let word = |s: Sign| match s {
                Sign::Pos => "greater than 15",
                Sign::Neg => "less than -16",
            };
            bins.push(BinDescriptor::new(
                double_overflow_bin_id(first, second),
                format!(
                    "16 consecutive integers whose differences alternate between two different constants, \
                     the first {} and the second {}.",
                    word(first),
                    word(second)
                ),
                Difficulty::Harder,
                BinGroup::Overflow,
            ));
        }
    }
    let transitions = [
        "16 integers with no stride pattern immediately followed by 16 integers with a single stride pattern.",
        "16 integers with no stride pattern immediately followed by 16 integers with a double stride pattern.",
        "16 integers with a single stride pattern immediately followed by 16 integers with a double stride pattern.",
        "16 integers with a double stride pattern immediately followed by 16 integers with a single stride pattern.",
    ];
    for (id, text) in TRANSITION_IDS.iter().zip(transitions) {
        bins.push(BinDescriptor::new(*id, text, Difficulty::Harder, BinGroup::Transition));
    }
    CoveragePlan::new("stride", bins)
}

/// Precomputed class → bin lookup.
#[derive(Debug, Clone)]
struct StrideBins {
    single: [BinIndex; STRIDES],
    double: Vec<Option<BinIndex>>,
    single_overflow: [BinIndex; 2],
    double_overflow: [BinIndex; 4],
    transitions: [BinIndex; 4],
}

fn sign_slot(sign: Sign) -> usize {
    match sign {
        Sign::Pos => 0,
        Sign::Neg => 1,
    }
}

impl StrideBins {
    fn new(plan: &CoveragePlan) -> Result<Self> {
        let mut single = [BinIndex(0); STRIDES];
        let mut double = vec![None; STRIDES * STRIDES];
        for c1 in STRIDE_MIN..=STRIDE_MAX {
            single[stride_slot(c1)] = plan.require(&single_bin_id(c1))?;
            for c2 in STRIDE_MIN..=STRIDE_MAX {
                if c1 != c2 {
                    double[stride_slot(c1) * STRIDES + stride_slot(c2)] = Some(plan.require(&double_bin_id(c1, c2))?);
                }
            }
        }
        let single_overflow = [
            plan.require(&single_overflow_bin_id(Sign::Pos))?,
            plan.require(&single_overflow_bin_id(Sign::Neg))?,
        ];
        let mut double_overflow = [BinIndex(0); 4];
        for a in [Sign::Pos, Sign::Neg] {
            for b in [Sign::Pos, Sign::Neg] {
                double_overflow[sign_slot(a) * 2 + sign_slot(b)] = plan.require(&double_overflow_bin_id(a, b))?;
            }
        }
        let mut transitions = [BinIndex(0); 4];
        for (slot, id) in transitions.iter_mut().zip(TRANSITION_IDS) {
            *slot = plan.require(id)?;
        }
        Ok(Self {
            single,
            double,
            single_overflow,
            double_overflow,
            transitions,
        })
    }

    fn pattern(&self, class: PatternClass) -> Option<BinIndex> {
        match class {
            PatternClass::None => None,
            PatternClass::Single(c) => Some(self.single[stride_slot(c)]),
            PatternClass::Double(c1, c2) => self.double[stride_slot(c1) * STRIDES + stride_slot(c2)],
            PatternClass::SingleOverflow(s) => Some(self.single_overflow[sign_slot(s)]),
            PatternClass::DoubleOverflow(a, b) => Some(self.double_overflow[sign_slot(a) * 2 + sign_slot(b)]),
        }
    }

    fn transition(&self, older: PatternClass, newer: PatternClass) -> Option<BinIndex> {
        let slot = match (older, newer) {
            (PatternClass::None, n) if n.is_single() => 0,
            (PatternClass::None, n) if n.is_double() => 1,
            (o, n) if o.is_single() && n.is_double() => 2,
            (o, n) if o.is_double() && n.is_single() => 3,
            _ => return None,
        };
        Some(self.transitions[slot])
    }
}

/// Sliding-window history of the last 32 accepted values.
#[derive(Debug, Clone, Default)]
pub struct StrideWindow {
    history: VecDeque<u32>,
}

impl StrideWindow {
    pub fn new() -> Self {
        Self {
            history: VecDeque::with_capacity(HISTORY),
        }
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    fn push(&mut self, value: u32) {
        if self.history.len() == HISTORY {
            self.history.pop_front();
        }
        self.history.push_back(value);
    }

    fn window_ending(&self, end: usize) -> [u32; WINDOW] {
        let mut out = [0u32; WINDOW];
        for (slot, v) in out.iter_mut().zip(self.history.range(end - WINDOW..end)) {
            *slot = *v;
        }
        out
    }

    pub fn clear(&mut self) {
        self.history.clear();
    }
}

/// The stride detector plus its monitor.
#[derive(Debug, Clone)]
pub struct StrideDut {
    plan: CoveragePlan,
    bins: StrideBins,
    window: StrideWindow,
}

impl StrideDut {
    pub fn new() -> Result<Self> {
        let plan = stride_plan()?;
        let bins = StrideBins::new(&plan)?;
        Ok(Self {
            plan,
            bins,
            window: StrideWindow::new(),
        })
    }

    /// Appends `value` and pushes every bin hit by this input into `hits`.
    pub fn feed(&mut self, value: u32, hits: &mut Vec<BinIndex>) {
        self.window.push(value);
        let len = self.window.len();
        if len < WINDOW {
            return;
        }
        let newer = classify_fixed(&self.window.window_ending(len));
        if let Some(bin) = self.bins.pattern(newer) {
            hits.push(bin);
        }
        if len == HISTORY {
            let older = classify_fixed(&self.window.window_ending(WINDOW));
            if let Some(bin) = self.bins.transition(older, newer) {
                hits.push(bin);
            }
        }
    }

    pub fn window(&self) -> &StrideWindow {
        &self.window
    }
}

fn classify_fixed(values: &[u32; WINDOW]) -> PatternClass {
    classify_window(values).expect("fixed-size window")
}

impl Dut for StrideDut {
    fn plan(&self) -> &CoveragePlan {
        &self.plan
    }

    fn profile(&self) -> TaskProfile {
        stride_profile()
    }

    fn reset(&mut self) {
        self.window.clear();
    }

    fn apply(&mut self, stimulus: &Stimulus, hits: &mut Vec<BinIndex>) -> Result<(), StimulusRejected> {
        match stimulus {
            Stimulus::Word(v) => {
                self.feed(*v, hits);
                Ok(())
            }
            Stimulus::Updates(_) => Err(StimulusRejected("the stride detector takes plain integers".into())),
        }
    }
}

fn stride_profile() -> TaskProfile {
    let mut negative_hints = BTreeMap::new();
    negative_hints.insert(
        BinGroup::SingleStride,
        "do not change the difference anywhere inside the 16 consecutive integers".to_owned(),
    );
    negative_hints.insert(
        BinGroup::DoubleStride,
        "do not use the same difference twice in a row, and do not let either difference drift".to_owned(),
    );
    negative_hints.insert(
        BinGroup::Overflow,
        "do not use differences inside the range -16 to 15".to_owned(),
    );
    negative_hints.insert(
        BinGroup::Transition,
        "do not emit fewer than 32 integers or let the two 16-integer halves share the same pattern type".to_owned(),
    );
    TaskProfile {
        name: "stride detector".to_owned(),
        intro: "You will receive a description of a stride detector and a list of coverage bins that it \
                counts. The detector reads a stream of 32-bit unsigned integers and checks whether the most \
                recent 16 integers follow a stride pattern. Your job is to write integer sequences that \
                make the detector hit as many uncovered bins as possible. After every answer you will be \
                told which bins are still uncovered."
            .to_owned(),
        one_line_intro: "Write 32-bit unsigned integer sequences that hit the uncovered stride-detector bins \
                         listed below."
            .to_owned(),
        plan_summary: "- Single-stride bins: 16 consecutive integers with a constant difference c, \
                       for each c from -16 to 15.\n\
                       - Double-stride bins: 16 consecutive integers whose differences alternate between \
                       two different constants c1 and c2, each from -16 to 15.\n\
                       - Overflow bins: single or double stride patterns whose differences lie outside -16 to 15 \
                       (positive overflow above 15, negative overflow below -16).\n\
                       - Transition bins: 16 integers of one pattern type immediately followed by 16 integers \
                       of another (no stride to single/double, single to double, double to single)."
            .to_owned(),
        format: WireFormat::Integers,
        negative_hints,
    }
}
