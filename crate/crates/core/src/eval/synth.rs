//! Seeded synthetic corpora with statistically separable levels.
//!
//! Each level draws moves from its own preference distribution over a shared
//! alphabet, mixed with uniform noise whose rate falls as the level rises.
//! An optional noise-free opening line and an extra-noisy midgame window give
//! position-dependent structure when an experiment needs it.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Corpus, EvalError};
use crate::pgn::RatingLevel;

/// An extra-noisy stretch of the game, by half-move position.
#[derive(Debug, Clone, PartialEq)]
pub struct MidgameNoise {
    /// First half-move position affected (1-based, inclusive).
    pub from: usize,
    /// Last half-move position affected (inclusive).
    pub to: usize,
    /// Noise rate inside the window; overrides the level rate when larger.
    pub rate: f64,
}

/// Full description of a synthetic seven-level corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Shared move alphabet.
    pub alphabet: Vec<String>,
    /// Per-level preference distribution over the alphabet; each row sums
    /// to one.
    pub preferences: Vec<Vec<f64>>,
    /// Per-level uniform-noise rate in [0, 1].
    pub noise: [f64; 7],
    pub games_per_level: usize,
    /// Game lengths are uniform in `min_len..=max_len`.
    pub min_len: usize,
    pub max_len: usize,
    /// Number of leading half-moves drawn noise-free from the level's
    /// preference ranking (a deterministic "opening line").
    pub opening_len: usize,
    pub midgame: Option<MidgameNoise>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// A seven-dialect corpus: rotated Zipf preferences over `alphabet_size`
    /// tokens and noise falling from 0.35 (L1) to 0.05 (L7).
    pub fn dialects(alphabet_size: usize, games_per_level: usize, seed: u64) -> SyntheticSpec {
        let alphabet: Vec<String> = (0..alphabet_size).map(|i| format!("m{i:02}")).collect();
        let offset = (alphabet_size / 7).max(1);
        let preferences = (0..7)
            .map(|level| zipf_rotated(alphabet_size, level * offset))
            .collect();
        SyntheticSpec {
            alphabet,
            preferences,
            noise: [0.35, 0.30, 0.25, 0.20, 0.15, 0.10, 0.05],
            games_per_level,
            min_len: 104,
            max_len: 140,
            opening_len: 0,
            midgame: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let invalid = |msg: String| Err(EvalError::InvalidSpec(msg));
        if self.alphabet.is_empty() {
            return invalid("alphabet is empty".into());
        }
        for tok in &self.alphabet {
            if tok.is_empty()
                || tok.contains(char::is_whitespace)
                || matches!(tok.as_str(), "<s>" | "</s>" | "<unk>")
            {
                return invalid(format!("bad alphabet token {tok:?}"));
            }
        }
        if self.preferences.len() != 7 {
            return invalid(format!("need 7 preference rows, got {}", self.preferences.len()));
        }
        for (i, row) in self.preferences.iter().enumerate() {
            if row.len() != self.alphabet.len() {
                return invalid(format!("preference row {i} has wrong width"));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return invalid(format!("preference row {i} has negative weights"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return invalid(format!("preference row {i} sums to {sum}, not 1"));
            }
        }
        if self.noise.iter().any(|n| !(0.0..=1.0).contains(n)) {
            return invalid("noise rates must be in [0, 1]".into());
        }
        if self.min_len < 1 || self.min_len > self.max_len {
            return invalid(format!("bad length range {}..={}", self.min_len, self.max_len));
        }
        if let Some(m) = &self.midgame {
            if m.from < 1 || m.from > m.to || !(0.0..=1.0).contains(&m.rate) {
                return invalid("bad midgame window".into());
            }
        }
        Ok(())
    }
}

/// Zipf weights assigned in rotated rank order: the token at `offset` gets
/// rank 0, its successor rank 1, and so on around the alphabet.
fn zipf_rotated(size: usize, offset: usize) -> Vec<f64> {
    let mut weights = vec![0.0; size];
    for rank in 0..size {
        let token = (offset + rank) % size;
        weights[token] = 1.0 / (rank + 1) as f64;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    weights
}

/// Generate the per-level corpora described by `spec`, deterministically
/// under its seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<BTreeMap<RatingLevel, Corpus>, EvalError> {
    spec.validate()?;
    let mut corpora = BTreeMap::new();
    for level in RatingLevel::ALL {
        let prefs = &spec.preferences[level.index()];
        let noise = spec.noise[level.index()];
        let mut corpus = Vec::with_capacity(spec.games_per_level);
        for game_index in 0..spec.games_per_level {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(((level.index() as u64) << 32) | game_index as u64);
            corpus.push(sample_game(spec, prefs, noise, &mut rng));
        }
        corpora.insert(level, corpus);
    }
    Ok(corpora)
}

fn sample_game(
    spec: &SyntheticSpec,
    prefs: &[f64],
    base_noise: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<String> {
    let len = rng.gen_range(spec.min_len..=spec.max_len);
    let mut ranking: Option<Vec<usize>> = None;
    let mut game = Vec::with_capacity(len);
    for position in 1..=len {
        if position <= spec.opening_len {
            // Deterministic opening line: tokens in preference-rank order.
            let ranking = ranking.get_or_insert_with(|| {
                let mut order: Vec<usize> = (0..prefs.len()).collect();
                order.sort_by(|&a, &b| prefs[b].total_cmp(&prefs[a]).then(a.cmp(&b)));
                order
            });
            let token = ranking[(position - 1) % ranking.len()];
            game.push(spec.alphabet[token].clone());
            continue;
        }
        let mut noise = base_noise;
        if let Some(m) = &spec.midgame {
            if position >= m.from && position <= m.to {
                noise = noise.max(m.rate);
            }
        }
        let token = if rng.gen::<f64>() < noise {
            rng.gen_range(0..spec.alphabet.len())
        } else {
            sample_discrete(prefs, rng)
        };
        game.push(spec.alphabet[token].clone());
    }
    game
}

fn sample_discrete(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let mut remaining = rng.gen::<f64>();
    for (i, w) in weights.iter().enumerate() {
        if remaining < *w {
            return i;
        }
        remaining -= w;
    }
    weights.len() - 1
}
