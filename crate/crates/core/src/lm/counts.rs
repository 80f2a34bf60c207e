//! Raw and continuation n-gram counting.
//!
//! Each game is framed with (order − 1) begin markers and one end marker.
//! Windows are anchored at predicted positions (every real token plus the
//! end marker), so an order-n window always spans exactly n tokens. Runs of
//! begin markers are additionally counted once per game at each lower order
//! as begin-state bookkeeping, which keeps the prefix-count invariant exact.

use std::collections::HashMap;

use super::vocab::{TokenId, Vocabulary, BOS, EOS};
use super::LmError;

pub type Gram = Box<[TokenId]>;

/// Occurrence and continuation counts for all orders `1..=order`.
#[derive(Debug, Clone)]
pub struct NGramCounts {
    order: usize,
    /// `raw[n-1]` maps n-grams to occurrence counts.
    raw: Vec<HashMap<Gram, u64>>,
    /// `cont[n-1]` maps n-grams to their distinct-left-extension counts,
    /// defined for orders below the highest.
    cont: Vec<HashMap<Gram, u64>>,
    vocab: Vocabulary,
    games: u64,
    tokens: u64,
}

/// Streaming accumulator: feed games one at a time, then [`finish`].
///
/// [`finish`]: CountAccumulator::finish
#[derive(Debug)]
pub struct CountAccumulator {
    order: usize,
    raw: Vec<HashMap<Gram, u64>>,
    vocab: Vocabulary,
    games: u64,
    tokens: u64,
    padded: Vec<TokenId>,
}

impl CountAccumulator {
    pub fn new(order: usize) -> Result<Self, LmError> {
        if order < 1 {
            return Err(LmError::InvalidOrder(order));
        }
        Ok(CountAccumulator {
            order,
            raw: vec![HashMap::new(); order],
            vocab: Vocabulary::new(),
            games: 0,
            tokens: 0,
            padded: Vec::new(),
        })
    }

    pub fn add_game<S: AsRef<str>>(&mut self, tokens: &[S]) {
        let order = self.order;
        self.games += 1;
        self.tokens += tokens.len() as u64;

        self.padded.clear();
        self.padded.extend(std::iter::repeat(BOS).take(order - 1));
        for t in tokens {
            let id = self.vocab.intern(t.as_ref());
            self.padded.push(id);
        }
        self.padded.push(EOS);

        // Windows of every order, anchored at each predicted position.
        // Hot path: look up by slice first so repeat windows allocate nothing.
        for anchor in (order - 1)..self.padded.len() {
            for n in 1..=order {
                let gram = &self.padded[anchor + 1 - n..=anchor];
                if let Some(count) = self.raw[n - 1].get_mut(gram) {
                    *count += 1;
                } else {
                    self.raw[n - 1].insert(Gram::from(gram), 1);
                }
            }
        }
        // Begin-state bookkeeping: one run of markers per game per order.
        for n in 1..order {
            let run = &self.padded[..n];
            if let Some(count) = self.raw[n - 1].get_mut(run) {
                *count += 1;
            } else {
                self.raw[n - 1].insert(Gram::from(run), 1);
            }
        }
    }

    /// Compute continuation counts and seal the accumulator.
    pub fn finish(self) -> NGramCounts {
        let mut cont: Vec<HashMap<Gram, u64>> = vec![HashMap::new(); self.order];
        for n in 2..=self.order {
            let mut suffixes: HashMap<Gram, u64> = HashMap::new();
            for gram in self.raw[n - 1].keys() {
                // Distinct keys sharing a suffix are distinct left extensions.
                *suffixes.entry(Gram::from(&gram[1..])).or_insert(0) += 1;
            }
            cont[n - 2] = suffixes;
        }
        NGramCounts {
            order: self.order,
            raw: self.raw,
            cont,
            vocab: self.vocab,
            games: self.games,
            tokens: self.tokens,
        }
    }
}

/// Count all n-grams of lengths `1..=order` over a corpus of token lists.
pub fn count_ngrams<S: AsRef<str>>(
    corpus: &[Vec<S>],
    order: usize,
) -> Result<NGramCounts, LmError> {
    let mut acc = CountAccumulator::new(order)?;
    for game in corpus {
        acc.add_game(game);
    }
    Ok(acc.finish())
}

impl NGramCounts {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn games(&self) -> u64 {
        self.games
    }

    pub fn tokens(&self) -> u64 {
        self.tokens
    }

    /// Occurrence count of one n-gram.
    pub fn raw(&self, gram: &[TokenId]) -> u64 {
        self.raw
            .get(gram.len().wrapping_sub(1))
            .and_then(|m| m.get(gram))
            .copied()
            .unwrap_or(0)
    }

    /// Distinct-left-extension count of one n-gram (orders below the highest).
    pub fn continuation(&self, gram: &[TokenId]) -> u64 {
        self.cont
            .get(gram.len().wrapping_sub(1))
            .and_then(|m| m.get(gram))
            .copied()
            .unwrap_or(0)
    }

    /// The count used for estimation at this gram's order: raw at the highest
    /// order and for begin-marker-initial grams, continuation otherwise.
    pub fn adjusted(&self, gram: &[TokenId]) -> u64 {
        if gram.len() == self.order || gram.first() == Some(&BOS) {
            self.raw(gram)
        } else {
            self.continuation(gram)
        }
    }

    pub fn grams_of_order(&self, n: usize) -> impl Iterator<Item = (&Gram, u64)> {
        self.raw[n - 1].iter().map(|(g, &c)| (g, c))
    }

    /// Sum of all unigram occurrence counts. Equals total tokens plus one end
    /// marker per game, plus one begin-marker run per game for orders ≥ 2.
    pub fn unigram_total(&self) -> u64 {
        self.raw[0].values().sum()
    }
}
