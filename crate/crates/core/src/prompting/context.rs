//! Dialogue state, the best-exchange buffer and context selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backend::ChatMessage;
use crate::coverage::{BinIndex, CoveragePlan, Difficulty};

/// Score of one newly hit harder bin under the difficulty-weighted ranking.
pub const HARDER_WEIGHT: f64 = 2.5;
/// Iterative exchanges kept in the assembled context.
pub const CONTEXT_EXCHANGES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextStrategy {
    #[default]
    Recent,
    Successful,
    #[serde(alias = "mixed")]
    MixedRecentSuccessful,
    SuccessfulDifficult,
}

/// One iterative query with its response and the bins the response hit.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub query: String,
    pub response: String,
    pub hits: Vec<BinIndex>,
    pub harder_hits: usize,
    /// Position in the trial; orders exchanges chronologically.
    pub seq: u64,
    /// Random key breaking score ties uniformly.
    pub tie_key: u64,
}

impl Exchange {
    pub fn new<R: Rng + ?Sized>(query: String, response: String, seq: u64, rng: &mut R) -> Self {
        Self {
            query,
            response,
            hits: Vec::new(),
            harder_hits: 0,
            seq,
            tie_key: rng.random(),
        }
    }

    pub fn set_hits(&mut self, plan: &CoveragePlan, hits: &[BinIndex]) {
        self.hits = hits.to_vec();
        self.harder_hits = hits.iter().filter(|b| plan.difficulty(**b) == Difficulty::Harder).count();
    }

    pub fn plain_score(&self) -> f64 {
        self.hits.len() as f64
    }

    pub fn weighted_score(&self) -> f64 {
        let easier = self.hits.len() - self.harder_hits;
        easier as f64 + HARDER_WEIGHT * self.harder_hits as f64
    }
}

/// System message, initial query and response, then iterative exchanges.
#[derive(Debug, Clone, PartialEq)]
pub struct Dialogue {
    pub system: String,
    pub initial_query: String,
    pub initial_response: Option<String>,
    pub exchanges: Vec<Exchange>,
}

impl Dialogue {
    pub fn new(system: String, initial_query: String) -> Self {
        Self {
            system,
            initial_query,
            initial_response: None,
            exchanges: Vec::new(),
        }
    }

    /// Drops everything after the initial query.
    pub fn restart(&mut self) {
        self.initial_response = None;
        self.exchanges.clear();
    }

    pub fn recent(&self, n: usize) -> &[Exchange] {
        &self.exchanges[self.exchanges.len().saturating_sub(n)..]
    }
}

/// Keeps the highest-scoring iterative exchanges seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct BestMessageBuffer {
    weighted: bool,
    capacity: usize,
    entries: Vec<Exchange>,
}

impl BestMessageBuffer {
    pub fn new(weighted: bool) -> Self {
        Self {
            weighted,
            capacity: CONTEXT_EXCHANGES,
            entries: Vec::new(),
        }
    }

    pub fn for_strategy(strategy: ContextStrategy) -> Self {
        Self::new(strategy == ContextStrategy::SuccessfulDifficult)
    }

    pub fn score(&self, e: &Exchange) -> f64 {
        if self.weighted {
            e.weighted_score()
        } else {
            e.plain_score()
        }
    }

    pub fn offer(&mut self, exchange: Exchange) {
        let mut entries = std::mem::take(&mut self.entries);
        entries.push(exchange);
        let key = |e: &Exchange| (self.score(e), e.tie_key);
        entries.sort_by(|a, b| key(b).partial_cmp(&key(a)).expect("scores are finite"));
        entries.truncate(self.capacity);
        self.entries = entries;
    }

    /// Best first.
    pub fn entries(&self) -> &[Exchange] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// The iterative exchanges placed in the next prompt, oldest first.
/// `use_buffer` is false while a stable restart suppresses the buffer, in
/// which case the most recent exchanges are used.
pub fn select_exchanges<'a>(
    dialogue: &'a Dialogue,
    buffer: &'a BestMessageBuffer,
    strategy: ContextStrategy,
    use_buffer: bool,
) -> Vec<&'a Exchange> {
    let mut chosen: Vec<&Exchange> = match strategy {
        _ if !use_buffer => dialogue.recent(CONTEXT_EXCHANGES).iter().collect(),
        ContextStrategy::Recent => dialogue.recent(CONTEXT_EXCHANGES).iter().collect(),
        ContextStrategy::Successful | ContextStrategy::SuccessfulDifficult => buffer.entries().iter().collect(),
        ContextStrategy::MixedRecentSuccessful => {
            let mut v: Vec<&Exchange> = buffer.entries().iter().take(CONTEXT_EXCHANGES - 1).collect();
            if let Some(last) = dialogue.exchanges.iter().rev().find(|e| v.iter().all(|b| b.seq != e.seq)) {
                v.push(last);
            }
            v
        }
    };
    chosen.sort_by_key(|e| e.seq);
    chosen
}

/// Assembles the chat messages preceding the next query.
pub fn select_context(
    dialogue: &Dialogue,
    buffer: &BestMessageBuffer,
    strategy: ContextStrategy,
    use_buffer: bool,
) -> Vec<ChatMessage> {
    let mut out = vec![ChatMessage::system(&dialogue.system), ChatMessage::user(&dialogue.initial_query)];
    if let Some(r) = &dialogue.initial_response {
        out.push(ChatMessage::assistant(r));
    }
    for e in select_exchanges(dialogue, buffer, strategy, use_buffer) {
        out.push(ChatMessage::user(&e.query));
        out.push(ChatMessage::assistant(&e.response));
    }
    out
}
