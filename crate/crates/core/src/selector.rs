//! Skill-level classification by cumulative surprisal.
//!
//! A game prefix is scored under all seven per-level models; the model that
//! found the prefix least surprising names the predicted level.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::lm::NGramModel;
use crate::pgn::RatingLevel;

/// The seven per-level models, one per skill level.
#[derive(Debug, Clone)]
pub struct ModelBank {
    models: [NGramModel; 7],
}

#[derive(Debug, Error)]
pub enum SelectorError {
    #[error("cannot classify an empty game")]
    EmptyGame,

    #[error("model bank is missing level {0}")]
    MissingLevel(RatingLevel),
}

impl ModelBank {
    pub fn new(models: Vec<(RatingLevel, NGramModel)>) -> Result<Self, SelectorError> {
        let mut slots: [Option<NGramModel>; 7] = Default::default();
        for (level, mut model) in models {
            model.set_level_tag(Some(level));
            slots[level.index()] = Some(model);
        }
        for level in RatingLevel::ALL {
            if slots[level.index()].is_none() {
                return Err(SelectorError::MissingLevel(level));
            }
        }
        Ok(ModelBank {
            models: slots.map(Option::unwrap),
        })
    }

    pub fn model(&self, level: RatingLevel) -> &NGramModel {
        &self.models[level.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (RatingLevel, &NGramModel)> {
        RatingLevel::ALL.iter().map(|&l| (l, self.model(l)))
    }
}

/// Classification outcome: the per-level evidence and the argmin level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorResult {
    /// Cumulative surprisal in bits per level, over the evaluated prefix.
    pub totals_bits: BTreeMap<RatingLevel, f64>,
    pub predicted: RatingLevel,
    /// Half-moves actually consumed: `min(k, game length)`.
    pub prefix_used: usize,
}

/// Sum of per-move surprisals over the first `min(k, |tokens|)` half-moves.
/// The end-of-game marker is not scored: it is not a move.
pub fn cumulative_surprisal<S: AsRef<str>>(
    model: &NGramModel,
    tokens: &[S],
    k: usize,
) -> Result<f64, SelectorError> {
    assert!(k >= 1, "prefix length must be at least 1");
    if tokens.is_empty() {
        return Err(SelectorError::EmptyGame);
    }
    let prefix_len = k.min(tokens.len());
    let ids = model.frame(tokens);
    let pad = model.order() - 1;
    let mut total = 0.0;
    for i in 0..prefix_len {
        total += model.surprisal_ids(ids[pad + i], &ids[..pad + i]);
    }
    Ok(total)
}

/// Pick the argmin level from seven totals; ties break toward the lower
/// level ordinal.
pub(crate) fn select_level(totals: &[f64; 7]) -> RatingLevel {
    let mut best = RatingLevel::L1;
    for level in RatingLevel::ALL {
        if totals[level.index()] < totals[best.index()] {
            best = level;
        }
    }
    best
}

/// Classify a game prefix: evaluate all seven cumulative surprisals over the
/// same prefix and take the argmin.
pub fn classify<S: AsRef<str>>(
    bank: &ModelBank,
    tokens: &[S],
    k: usize,
) -> Result<SelectorResult, SelectorError> {
    assert!(k >= 1, "prefix length must be at least 1");
    if tokens.is_empty() {
        return Err(SelectorError::EmptyGame);
    }
    let mut totals = [0.0f64; 7];
    for level in RatingLevel::ALL {
        totals[level.index()] = cumulative_surprisal(bank.model(level), tokens, k)?;
    }
    let predicted = select_level(&totals);
    let totals_bits = RatingLevel::ALL
        .iter()
        .map(|&l| (l, totals[l.index()]))
        .collect();
    Ok(SelectorResult {
        totals_bits,
        predicted,
        prefix_used: k.min(tokens.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{count_ngrams, estimate, SmoothingConfig};
    use proptest::prelude::*;

    fn tiny_model(corpus: &[&[&str]]) -> NGramModel {
        let corpus: Vec<Vec<String>> = corpus
            .iter()
            .map(|g| g.iter().map(|t| t.to_string()).collect())
            .collect();
        let counts = count_ngrams(&corpus, 2).unwrap();
        estimate(&counts, &SmoothingConfig::default()).unwrap().model
    }

    fn tiny_bank() -> ModelBank {
        // Each level prefers a distinct opening token.
        let openings = ["a1", "b2", "c3", "d4", "e5", "f6", "g7"];
        let models = RatingLevel::ALL
            .iter()
            .enumerate()
            .map(|(i, &level)| {
                let tok = openings[i];
                (level, tiny_model(&[&[tok, "x", "y"], &[tok, "x", "z"]]))
            })
            .collect();
        ModelBank::new(models).unwrap()
    }

    #[test]
    fn bank_requires_all_seven_levels() {
        let one = vec![(RatingLevel::L1, tiny_model(&[&["e4"]]))];
        assert!(matches!(
            ModelBank::new(one),
            Err(SelectorError::MissingLevel(_))
        ));
    }

    #[test]
    fn argmin_picks_lowest_total() {
        let totals = [30.1, 28.5, 29.0, 33.0, 35.2, 40.0, 41.3];
        assert_eq!(select_level(&totals), RatingLevel::L2);
    }

    #[test]
    fn ties_break_toward_the_lower_level() {
        assert_eq!(select_level(&[5.0; 7]), RatingLevel::L1);
        let mut totals = [5.0; 7];
        totals[3] = 1.0;
        totals[5] = 1.0;
        assert_eq!(select_level(&totals), RatingLevel::L4);
    }

    #[test]
    fn cumulative_surprisal_matches_trace() {
        let bank = tiny_bank();
        let model = bank.model(RatingLevel::L3);
        let game: Vec<String> = ["c3", "x", "y"].iter().map(|s| s.to_string()).collect();
        let trace = model.score_game(&game);
        let full = cumulative_surprisal(model, &game, 100).unwrap();
        assert!((full - trace.total_bits).abs() < 1e-12);
        let first = cumulative_surprisal(model, &game, 1).unwrap();
        assert!((first - trace.points[0].bits).abs() < 1e-12);
        // Re-sum independently at k = 2.
        let two = cumulative_surprisal(model, &game, 2).unwrap();
        let resum: f64 = trace.points[..2].iter().map(|p| p.bits).sum();
        assert!((two - resum).abs() < 1e-12);
    }

    #[test]
    fn empty_game_is_rejected() {
        let bank = tiny_bank();
        assert!(matches!(
            classify::<String>(&bank, &[], 16),
            Err(SelectorError::EmptyGame)
        ));
        assert!(matches!(
            cumulative_surprisal::<String>(bank.model(RatingLevel::L1), &[], 4),
            Err(SelectorError::EmptyGame)
        ));
    }

    #[test]
    fn short_game_classified_on_full_length() {
        let bank = tiny_bank();
        let game: Vec<String> = ["d4", "x"].iter().map(|s| s.to_string()).collect();
        let result = classify(&bank, &game, 16).unwrap();
        assert_eq!(result.prefix_used, 2);
        assert_eq!(result.predicted, RatingLevel::L4);
    }

    #[test]
    fn dialect_games_classify_to_their_level() {
        let bank = tiny_bank();
        let openings = ["a1", "b2", "c3", "d4", "e5", "f6", "g7"];
        for (i, &level) in RatingLevel::ALL.iter().enumerate() {
            let game: Vec<String> = [openings[i], "x", "y"].iter().map(|s| s.to_string()).collect();
            let result = classify(&bank, &game, 16).unwrap();
            assert_eq!(result.predicted, level);
            assert_eq!(result.totals_bits.len(), 7);
        }
    }

    #[test]
    fn surprisal_is_nondecreasing_in_k() {
        let bank = tiny_bank();
        let game: Vec<String> = ["c3", "x", "y", "q", "r"].iter().map(|s| s.to_string()).collect();
        for (_, model) in bank.iter() {
            let mut last = 0.0;
            for k in 1..=5 {
                let total = cumulative_surprisal(model, &game, k).unwrap();
                assert!(total >= last - 1e-12, "k={k}: {total} < {last}");
                last = total;
            }
        }
    }

    proptest! {
        /// Adding a constant to all totals or scaling them by a positive
        /// factor never changes the argmin.
        #[test]
        fn argmin_invariant_under_shift_and_scale(
            totals in proptest::array::uniform7(0.0f64..1000.0),
            shift in -100.0f64..100.0,
            scale in 0.001f64..1000.0,
        ) {
            let base = select_level(&totals);
            let shifted = totals.map(|t| t + shift);
            let scaled = totals.map(|t| t * scale);
            prop_assert_eq!(select_level(&shifted), base);
            prop_assert_eq!(select_level(&scaled), base);
        }
    }
}
