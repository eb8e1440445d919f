//! Missed-bin sampling: which uncovered bins are listed in an iterative query.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coverage::{BinIndex, CoveragePlan, Difficulty};
use crate::error::{Error, Result};

/// Responses the mixed sampler gives the active method before judging it.
pub const MIXED_WINDOW: usize = 4;
/// New bins the active method must hit within the window to stay active.
pub const MIXED_MIN_HITS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissedBinMethod {
    PureRandom,
    #[default]
    TypeBased,
    Mixed,
}

fn pick<R: Rng + ?Sized>(pool: &[BinIndex], n: usize, rng: &mut R) -> Vec<BinIndex> {
    pool.choose_multiple(rng, n).copied().collect()
}

/// Up to `n` uniformly chosen bins, returned in plan order.
pub fn sample_pure_random<R: Rng + ?Sized>(uncovered: &[BinIndex], n: usize, rng: &mut R) -> Vec<BinIndex> {
    let mut out = pick(uncovered, n, rng);
    out.sort();
    out
}

/// The first two uncovered bins, then three easier and two harder ones (for
/// `n = 7`), or random ones once no easier bin is left. `uncovered` must be
/// in plan order.
pub fn sample_type_based<R: Rng + ?Sized>(
    plan: &CoveragePlan,
    uncovered: &[BinIndex],
    n: usize,
    rng: &mut R,
) -> Vec<BinIndex> {
    let head = uncovered.len().min(2).min(n);
    let mut out = uncovered[..head].to_vec();
    let rest = &uncovered[head..];
    let quota = n - head;
    let (easier, harder): (Vec<BinIndex>, Vec<BinIndex>) =
        rest.iter().partition(|b| plan.difficulty(**b) == Difficulty::Easier);
    if easier.is_empty() {
        out.extend(sample_pure_random(rest, quota, rng));
        return out;
    }
    let want_easier = quota.saturating_sub(2).max(quota.min(1));
    let mut e = pick(&easier, want_easier.min(easier.len()), rng);
    let mut h = pick(&harder, (quota - e.len()).min(harder.len()), rng);
    if e.len() + h.len() < quota {
        let extra: Vec<BinIndex> = easier.iter().filter(|b| !e.contains(b)).copied().collect();
        e.extend(pick(&extra, quota - e.len() - h.len(), rng));
    }
    e.sort();
    h.sort();
    out.extend(e);
    out.extend(h);
    out
}

/// Stateful sampler; the mixed method toggles between type-based and pure
/// random sampling depending on recent progress.
#[derive(Debug, Clone)]
pub struct MissedBinSampler {
    method: MissedBinMethod,
    sample_size: usize,
    threshold: f64,
    active: MissedBinMethod,
    window: Vec<usize>,
}

impl MissedBinSampler {
    pub fn new(method: MissedBinMethod, sample_size: usize, threshold: f64) -> Self {
        Self {
            method,
            sample_size,
            threshold,
            active: MissedBinMethod::TypeBased,
            window: Vec::new(),
        }
    }

    pub fn reset(&mut self) {
        self.active = MissedBinMethod::TypeBased;
        self.window.clear();
    }

    /// The concrete method the next `sample` call uses.
    pub fn active_method(&self, rate: f64) -> MissedBinMethod {
        match self.method {
            MissedBinMethod::Mixed if rate < self.threshold => MissedBinMethod::TypeBased,
            MissedBinMethod::Mixed => self.active,
            m => m,
        }
    }

    /// Records the new-bin count of a response and the coverage rate after it.
    pub fn observe(&mut self, delta: usize, rate: f64) {
        if self.method != MissedBinMethod::Mixed {
            return;
        }
        if rate < self.threshold {
            self.active = MissedBinMethod::TypeBased;
            self.window.clear();
            return;
        }
        self.window.push(delta);
        if self.window.len() >= MIXED_WINDOW {
            let recent: usize = self.window[self.window.len() - MIXED_WINDOW..].iter().sum();
            if recent < MIXED_MIN_HITS {
                self.active = match self.active {
                    MissedBinMethod::TypeBased => MissedBinMethod::PureRandom,
                    _ => MissedBinMethod::TypeBased,
                };
                self.window.clear();
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        plan: &CoveragePlan,
        uncovered: &[BinIndex],
        rate: f64,
        rng: &mut R,
    ) -> Result<Vec<BinIndex>> {
        if uncovered.is_empty() {
            return Err(Error::NothingToSample);
        }
        Ok(match self.active_method(rate) {
            MissedBinMethod::PureRandom => sample_pure_random(uncovered, self.sample_size, rng),
            _ => sample_type_based(plan, uncovered, self.sample_size, rng),
        })
    }
}
