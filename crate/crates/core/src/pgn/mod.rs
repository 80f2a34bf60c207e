//! PGN archive ingestion: streaming game extraction, movetext cleaning,
//! rating-based skill binning, and corpus emission.
//!
//! Archives are treated as plain text. No move legality checking is done
//! anywhere in this module; a game is a header block plus whatever movetext
//! follows it, and cleaning is purely lexical.

mod clean;
mod corpus;
mod rating;
mod stream;

pub use clean::clean_movetext;
pub use corpus::{
    build_corpora, read_corpus, sample_split, write_corpus, CorpusSplit, IngestStats, SkipReason,
};
pub use rating::{assign_level, extract_avg_rating, LevelBins};
pub use stream::{stream_games, Compression, GameStream};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the seven skill levels, ordered `L1 < L2 < ... < L7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RatingLevel {
    L1,
    L2,
    L3,
    L4,
    L5,
    L6,
    L7,
}

impl RatingLevel {
    pub const ALL: [RatingLevel; 7] = [
        RatingLevel::L1,
        RatingLevel::L2,
        RatingLevel::L3,
        RatingLevel::L4,
        RatingLevel::L5,
        RatingLevel::L6,
        RatingLevel::L7,
    ];

    /// 1-based ordinal, `L1 -> 1` through `L7 -> 7`.
    pub fn ordinal(self) -> u8 {
        self as u8 + 1
    }

    /// 0-based index into per-level arrays.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<RatingLevel> {
        Self::ALL.get(index).copied()
    }
}

impl fmt::Display for RatingLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.ordinal())
    }
}

impl std::str::FromStr for RatingLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L1" | "l1" | "1" => Ok(RatingLevel::L1),
            "L2" | "l2" | "2" => Ok(RatingLevel::L2),
            "L3" | "l3" | "3" => Ok(RatingLevel::L3),
            "L4" | "l4" | "4" => Ok(RatingLevel::L4),
            "L5" | "l5" | "5" => Ok(RatingLevel::L5),
            "L6" | "l6" | "6" => Ok(RatingLevel::L6),
            "L7" | "l7" | "7" => Ok(RatingLevel::L7),
            other => Err(format!("unknown rating level: {other:?}")),
        }
    }
}

/// A raw game as segmented from an archive: header tag pairs in source order
/// plus the unmodified movetext between the headers and the next game.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawGame {
    pub headers: Vec<(String, String)>,
    pub movetext: String,
}

impl RawGame {
    /// Exact-name header lookup. First match wins when a tag repeats.
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    /// Provenance string: the Site header when present (Lichess game URL),
    /// otherwise empty. Callers fall back to archive ordinals.
    pub fn site(&self) -> Option<&str> {
        self.header("Site")
    }
}

/// One cleaned game ready for corpus emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub level: RatingLevel,
    pub avg_rating: f64,
    pub tokens: Vec<String>,
    pub source_id: String,
}

/// Ingestion and sampling failures.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("rating header {header:?} missing or non-numeric")]
    RatingMissing { header: String },

    #[error("invalid average rating {value}: must be finite and non-negative")]
    InvalidRating { value: f64 },

    #[error("malformed movetext at byte {position}: {reason}")]
    MalformedMovetext { position: usize, reason: String },

    #[error("stream error at byte {offset}: {source}")]
    Stream {
        offset: u64,
        #[source]
        source: std::io::Error,
    },

    #[error("requested {requested} test games but only {available} are available")]
    InsufficientGames { requested: usize, available: usize },

    #[error("invalid level bins: {0}")]
    InvalidBins(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
