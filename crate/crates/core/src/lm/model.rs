//! Backoff model storage and probability queries.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use super::counts::Gram;
use super::vocab::{TokenId, Vocabulary, BOS, UNK};
use super::{LmError, SurprisalTrace, TracePoint};
use crate::pgn::RatingLevel;

/// log2(10): converts log10 probabilities to bits.
pub(crate) const LOG2_10: f64 = 3.321928094887362;

/// Placeholder log10 probability for context-only entries (begin-marker runs
/// are never predicted).
pub(crate) const PLACEHOLDER_LOG10: f64 = -99.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Entry {
    pub logp: f64,
    /// log10 backoff weight; `None` when the entry never acts as a context.
    pub bow: Option<f64>,
}

/// An order-N backoff language model over move tokens.
///
/// Stored probabilities are log10 (the interchange convention); queries are
/// total functions: unseen tokens resolve to the unknown marker and unseen
/// histories back off through stored weights. A constructed model is
/// immutable, so concurrent queries need no synchronization beyond the
/// internal instrumentation counter.
#[derive(Debug)]
pub struct NGramModel {
    order: usize,
    vocab: Vocabulary,
    /// `entries[n-1]` holds the n-gram table.
    entries: Vec<HashMap<Gram, Entry>>,
    level_tag: Option<RatingLevel>,
    /// Number of conditional-probability evaluations served.
    queries: AtomicU64,
}

impl Clone for NGramModel {
    fn clone(&self) -> Self {
        NGramModel {
            order: self.order,
            vocab: self.vocab.clone(),
            entries: self.entries.clone(),
            level_tag: self.level_tag,
            queries: AtomicU64::new(0),
        }
    }
}

impl NGramModel {
    pub(crate) fn from_parts(
        order: usize,
        vocab: Vocabulary,
        entries: Vec<HashMap<Gram, Entry>>,
        level_tag: Option<RatingLevel>,
    ) -> Self {
        debug_assert_eq!(entries.len(), order);
        NGramModel {
            order,
            vocab,
            entries,
            level_tag,
            queries: AtomicU64::new(0),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn level_tag(&self) -> Option<RatingLevel> {
        self.level_tag
    }

    pub fn set_level_tag(&mut self, level: Option<RatingLevel>) {
        self.level_tag = level;
    }

    /// Number of stored n-grams at each order, for interchange headers.
    pub fn gram_counts(&self) -> Vec<usize> {
        self.entries.iter().map(HashMap::len).collect()
    }

    pub(crate) fn entry(&self, gram: &[TokenId]) -> Option<Entry> {
        self.entries
            .get(gram.len().wrapping_sub(1))
            .and_then(|m| m.get(gram))
            .copied()
    }

    pub(crate) fn entries_of_order(&self, n: usize) -> impl Iterator<Item = (&Gram, &Entry)> {
        self.entries[n - 1].iter()
    }

    /// Conditional-probability evaluations served since construction.
    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    /// log10 P(token | history). Only the last `order - 1` history tokens are
    /// consulted; unseen strings resolve to the unknown token.
    pub fn logprob<S: AsRef<str>>(&self, token: &str, history: &[S]) -> f64 {
        let w = self.vocab.get(token);
        let start = history.len().saturating_sub(self.order - 1);
        let hist: Vec<TokenId> = history[start..]
            .iter()
            .map(|t| self.vocab.get(t.as_ref()))
            .collect();
        self.logprob_ids(w, &hist)
    }

    /// Id-level query path. The history may be any length; only the trailing
    /// `order - 1` ids are used.
    pub fn logprob_ids(&self, w: TokenId, history: &[TokenId]) -> f64 {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let start = history.len().saturating_sub(self.order - 1);
        let hist = &history[start..];

        let mut key: Vec<TokenId> = Vec::with_capacity(hist.len() + 1);
        key.extend_from_slice(hist);
        key.push(w);

        let mut accumulated_bow = 0.0;
        for k in (0..=hist.len()).rev() {
            let gram = &key[hist.len() - k..];
            if let Some(entry) = self.entry(gram) {
                return entry.logp + accumulated_bow;
            }
            if k > 0 {
                let context = &key[hist.len() - k..hist.len()];
                if let Some(ctx) = self.entry(context) {
                    accumulated_bow += ctx.bow.unwrap_or(0.0);
                }
            }
        }
        // Unigram floor: the unknown token when stored, else the placeholder.
        let floor = self
            .entry(&[UNK])
            .map(|e| e.logp)
            .unwrap_or(PLACEHOLDER_LOG10);
        floor + accumulated_bow
    }

    /// Surprisal of `token` given `history`, in bits: −log2 P.
    pub fn surprisal<S: AsRef<str>>(&self, token: &str, history: &[S]) -> f64 {
        -self.logprob(token, history) * LOG2_10 + 0.0
    }

    pub(crate) fn surprisal_ids(&self, w: TokenId, history: &[TokenId]) -> f64 {
        -self.logprob_ids(w, history) * LOG2_10 + 0.0
    }

    /// Map game tokens to ids framed with begin markers. The returned vector
    /// holds `order - 1` begin markers followed by the token ids; position
    /// `i`'s query context is everything before index `order - 1 + i`.
    pub(crate) fn frame<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<TokenId> {
        let mut ids = Vec::with_capacity(self.order - 1 + tokens.len());
        ids.extend(std::iter::repeat(BOS).take(self.order - 1));
        ids.extend(tokens.iter().map(|t| self.vocab.get(t.as_ref())));
        ids
    }

    /// Per-move surprisals for a whole game. The end-of-game marker is not
    /// scored here: traces feed move-level aggregation, and the end marker is
    /// not a move.
    pub fn score_game<S: AsRef<str>>(&self, tokens: &[S]) -> SurprisalTrace {
        let ids = self.frame(tokens);
        let pad = self.order - 1;
        let mut points = Vec::with_capacity(tokens.len());
        let mut total = 0.0;
        for (i, token) in tokens.iter().enumerate() {
            let bits = self.surprisal_ids(ids[pad + i], &ids[..pad + i]);
            total += bits;
            points.push(TracePoint {
                position: i + 1,
                token: token.as_ref().to_string(),
                bits,
            });
        }
        SurprisalTrace {
            points,
            total_bits: total,
            token_count: tokens.len(),
        }
    }

    /// Corpus perplexity: `2^(total bits / scored tokens)`, where each game
    /// scores its tokens plus the end-of-game marker, the standard sequence
    /// convention.
    pub fn perplexity<S: AsRef<str>>(&self, corpus: &[Vec<S>]) -> Result<f64, LmError> {
        if corpus.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let (mut bits, mut scored) = (0.0, 0u64);
        for game in corpus {
            let trace = self.score_game(game);
            let ids = self.frame(game);
            bits += trace.total_bits + self.surprisal_ids(super::vocab::EOS, &ids);
            scored += game.len() as u64 + 1;
        }
        Ok(2f64.powf(bits / scored as f64))
    }
}
