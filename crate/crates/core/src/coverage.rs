//! Coverage bins, plans and the per-trial hit database.
//!
//! A [`CoveragePlan`] is an ordered list of [`BinDescriptor`]s, sorted
//! lexicographically by id. Monitors refer to bins by [`BinIndex`], the
//! position of the bin inside its plan, so recording a hit never touches a
//! string.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coarse difficulty class used by the type-based sampler and the weighted
/// best-message score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easier,
    Harder,
}

/// Bin family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinGroup {
    SingleStride,
    DoubleStride,
    Overflow,
    Transition,
    AluOp,
    RegisterPort,
    Cross,
    Operation,
    Jump,
    Hazard,
    Misc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinDescriptor {
    pub id: String,
    pub description: String,
    pub difficulty: Difficulty,
    pub group: BinGroup,
}

impl BinDescriptor {
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        difficulty: Difficulty,
        group: BinGroup,
    ) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            difficulty,
            group,
        }
    }
}

/// Position of a bin inside its plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinIndex(pub u32);

impl BinIndex {
    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for BinIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct CoveragePlan {
    name: String,
    bins: Vec<BinDescriptor>,
    by_id: HashMap<String, BinIndex>,
}

impl CoveragePlan {
    /// Builds a plan, sorting bins by id. Rejects duplicate ids and empty
    /// descriptions.
    pub fn new(name: impl Into<String>, mut bins: Vec<BinDescriptor>) -> Result<Self> {
        let name = name.into();
        bins.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_id = HashMap::with_capacity(bins.len());
        for (i, bin) in bins.iter().enumerate() {
            if bin.description.trim().is_empty() {
                return Err(Error::InvalidPlan(format!("bin `{}` has no description", bin.id)));
            }
            if by_id.insert(bin.id.clone(), BinIndex(i as u32)).is_some() {
                return Err(Error::InvalidPlan(format!("duplicate bin id `{}`", bin.id)));
            }
        }
        Ok(Self { name, bins, by_id })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bins(&self) -> &[BinDescriptor] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn get(&self, index: BinIndex) -> Option<&BinDescriptor> {
        self.bins.get(index.get())
    }

    pub fn index_of(&self, id: &str) -> Option<BinIndex> {
        self.by_id.get(id).copied()
    }

    /// Like [`index_of`](Self::index_of) but treats a missing id as a bug.
    pub fn require(&self, id: &str) -> Result<BinIndex> {
        self.index_of(id).ok_or_else(|| Error::UnknownBinId(id.to_owned()))
    }

    pub fn id(&self, index: BinIndex) -> &str {
        &self.bins[index.get()].id
    }

    pub fn difficulty(&self, index: BinIndex) -> Difficulty {
        self.bins[index.get()].difficulty
    }

    /// JSON array of `{id, description, difficulty, group}` in plan order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.bins).expect("bin descriptors always serialize")
    }
}

/// Per-bin hit counts for one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageState {
    hits: Vec<u64>,
    covered: usize,
}

impl CoverageState {
    pub fn new(plan: &CoveragePlan) -> Self {
        Self {
            hits: vec![0; plan.len()],
            covered: 0,
        }
    }

    /// Adds one hit per occurrence in `bins` and returns how many bins went
    /// from zero to non-zero. Nothing is recorded if any index is unknown.
    pub fn record_hits(&mut self, bins: &[BinIndex]) -> Result<usize> {
        if let Some(bad) = bins.iter().find(|b| b.get() >= self.hits.len()) {
            return Err(Error::UnknownBin {
                index: bad.get(),
                len: self.hits.len(),
            });
        }
        let mut delta = 0;
        for bin in bins {
            let count = &mut self.hits[bin.get()];
            if *count == 0 {
                delta += 1;
            }
            *count += 1;
        }
        self.covered += delta;
        Ok(delta)
    }

    /// Same as [`record_hits`](Self::record_hits) but also reports which bins
    /// were newly covered, in first-hit order.
    pub fn record_hits_collect(&mut self, bins: &[BinIndex], newly: &mut Vec<BinIndex>) -> Result<usize> {
        if let Some(bad) = bins.iter().find(|b| b.get() >= self.hits.len()) {
            return Err(Error::UnknownBin {
                index: bad.get(),
                len: self.hits.len(),
            });
        }
        let before = newly.len();
        for bin in bins {
            let count = &mut self.hits[bin.get()];
            if *count == 0 {
                newly.push(*bin);
            }
            *count += 1;
        }
        let delta = newly.len() - before;
        self.covered += delta;
        Ok(delta)
    }

    pub fn count(&self, bin: BinIndex) -> u64 {
        self.hits.get(bin.get()).copied().unwrap_or(0)
    }

    pub fn is_covered(&self, bin: BinIndex) -> bool {
        self.count(bin) > 0
    }

    pub fn covered_count(&self) -> usize {
        self.covered
    }

    pub fn is_complete(&self) -> bool {
        self.covered == self.hits.len()
    }

    pub fn covered_indices(&self) -> impl Iterator<Item = BinIndex> + '_ {
        self.hits
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| BinIndex(i as u32))
    }

    /// Uncovered bins in plan order.
    pub fn uncovered_indices(&self) -> Vec<BinIndex> {
        self.hits
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(i, _)| BinIndex(i as u32))
            .collect()
    }

    pub fn counts(&self) -> &[u64] {
        &self.hits
    }
}

/// Fraction of plan bins with a non-zero count.
pub fn coverage_rate(state: &CoverageState, plan: &CoveragePlan) -> Result<f64> {
    if plan.is_empty() {
        return Err(Error::EmptyPlan(plan.name().to_owned()));
    }
    Ok(state.covered_count() as f64 / plan.len() as f64)
}

/// Bins with a zero count, in plan order.
pub fn uncovered<'p>(state: &CoverageState, plan: &'p CoveragePlan) -> Vec<&'p BinDescriptor> {
    plan.bins()
        .iter()
        .enumerate()
        .filter(|(i, _)| state.count(BinIndex(*i as u32)) == 0)
        .map(|(_, b)| b)
        .collect()
}

/// Formats a rate as a percentage with two decimals, e.g. `0.39%`.
pub fn format_rate(rate: f64) -> String {
    format!("{:.2}%", rate * 100.0)
}
