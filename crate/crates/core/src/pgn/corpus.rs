//! Corpus assembly: cleaning, binning, deterministic sampling, and the
//! one-game-per-line corpus file format.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    clean_movetext, extract_avg_rating, GameRecord, IngestError, LevelBins, RatingLevel, RawGame,
};

/// Why a game was dropped during corpus building.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SkipReason {
    RatingMissing,
    InvalidRating,
    MalformedMovetext,
    EmptyGame,
}

/// Per-level and per-skip-reason counters for one ingestion run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub levels: BTreeMap<String, u64>,
    pub skipped: BTreeMap<String, u64>,
    pub total_games: u64,
}

impl IngestStats {
    fn record_level(&mut self, level: RatingLevel) {
        *self.levels.entry(level.to_string()).or_insert(0) += 1;
    }

    fn record_skip(&mut self, reason: SkipReason) {
        let key = match reason {
            SkipReason::RatingMissing => "rating_missing",
            SkipReason::InvalidRating => "invalid_rating",
            SkipReason::MalformedMovetext => "malformed_movetext",
            SkipReason::EmptyGame => "empty_game",
        };
        *self.skipped.entry(key.to_string()).or_insert(0) += 1;
    }

    pub fn skip_count(&self, reason: SkipReason) -> u64 {
        let key = match reason {
            SkipReason::RatingMissing => "rating_missing",
            SkipReason::InvalidRating => "invalid_rating",
            SkipReason::MalformedMovetext => "malformed_movetext",
            SkipReason::EmptyGame => "empty_game",
        };
        self.skipped.get(key).copied().unwrap_or(0)
    }
}

/// Clean, rate, and bin a stream of raw games into per-level corpora.
///
/// Nothing is fatal here: games with missing ratings, malformed movetext, or
/// zero cleaned tokens are counted and dropped.
pub fn build_corpora<I>(games: I, bins: &LevelBins) -> (BTreeMap<RatingLevel, Vec<GameRecord>>, IngestStats)
where
    I: IntoIterator<Item = RawGame>,
{
    let mut corpora: BTreeMap<RatingLevel, Vec<GameRecord>> = BTreeMap::new();
    let mut stats = IngestStats::default();
    for (ordinal, game) in games.into_iter().enumerate() {
        stats.total_games += 1;
        let avg_rating = match extract_avg_rating(&game) {
            Ok(r) => r,
            Err(_) => {
                stats.record_skip(SkipReason::RatingMissing);
                continue;
            }
        };
        let level = match bins.assign(avg_rating) {
            Ok(level) => level,
            Err(_) => {
                stats.record_skip(SkipReason::InvalidRating);
                continue;
            }
        };
        let tokens = match clean_movetext(&game.movetext) {
            Ok(tokens) => tokens,
            Err(_) => {
                stats.record_skip(SkipReason::MalformedMovetext);
                continue;
            }
        };
        if tokens.is_empty() {
            stats.record_skip(SkipReason::EmptyGame);
            continue;
        }
        let source_id = game
            .site()
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{ordinal}"));
        stats.record_level(level);
        corpora.entry(level).or_default().push(GameRecord {
            level,
            avg_rating,
            tokens,
            source_id,
        });
    }
    (corpora, stats)
}

/// A deterministic train/test split of one level's records.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<GameRecord>,
    pub test: Vec<GameRecord>,
    pub seed: u64,
    pub train_fraction: f64,
    pub test_count: usize,
}

/// Sample a train set (a fraction of the records) and a disjoint test set
/// (a fixed count) without replacement, deterministically under `seed`.
///
/// Either side may be empty: `train_fraction = 1.0` takes everything for
/// training, `test_count = 0` skips the test draw. The split is by record
/// identity, so train and test never share a game from the same archive.
pub fn sample_split(
    records: &[GameRecord],
    train_fraction: f64,
    test_count: usize,
    seed: u64,
) -> Result<CorpusSplit, IngestError> {
    assert!(
        train_fraction > 0.0 && train_fraction <= 1.0,
        "train_fraction must be in (0, 1]"
    );
    let mut indices: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let train_count = (records.len() as f64 * train_fraction).round() as usize;
    let train_count = train_count.min(records.len());
    let available = records.len() - train_count;
    if test_count > available {
        return Err(IngestError::InsufficientGames {
            requested: test_count,
            available,
        });
    }
    let train = indices[..train_count]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    let test = indices[train_count..train_count + test_count]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    Ok(CorpusSplit {
        train,
        test,
        seed,
        train_fraction,
        test_count,
    })
}

/// Write records one game per line, tokens joined by single spaces.
/// Returns the number of games written.
pub fn write_corpus<W: Write>(records: &[GameRecord], sink: &mut W) -> Result<usize, IngestError> {
    let mut written = 0;
    for record in records {
        sink.write_all(record.tokens.join(" ").as_bytes())?;
        sink.write_all(b"\n")?;
        written += 1;
    }
    Ok(written)
}

/// Read a corpus file back into token lists. Blank lines are not valid
/// corpus content and are skipped.
pub fn read_corpus<R: Read>(source: R) -> Result<Vec<Vec<String>>, IngestError> {
    let mut games = Vec::new();
    for line in BufReader::new(source).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        games.push(line.split_whitespace().map(str::to_string).collect());
    }
    Ok(games)
}
