//! Order-N backoff language models over move tokens: counting, interpolated
//! modified Kneser-Ney estimation, probability and surprisal queries, and
//! ARPA interchange.

pub mod arpa;
mod counts;
mod estimate;
mod model;
pub mod vocab;

pub use arpa::{read_arpa, write_arpa};
pub use counts::{count_ngrams, CountAccumulator, NGramCounts};
pub use estimate::{estimate, Discounts, Estimation, SmoothingConfig};
pub use model::NGramModel;
pub use vocab::Vocabulary;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One scored position in a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// 1-based half-move index.
    pub position: usize,
    pub token: String,
    /// Surprisal in bits.
    pub bits: f64,
}

/// Per-move surprisals for one game under one model. End-of-game framing is
/// not included; see [`NGramModel::score_game`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurprisalTrace {
    pub points: Vec<TracePoint>,
    pub total_bits: f64,
    pub token_count: usize,
}

#[derive(Debug, Error)]
pub enum LmError {
    #[error("model order must be at least 1, got {0}")]
    InvalidOrder(usize),

    #[error("cannot score an empty corpus")]
    EmptyCorpus,

    #[error("ARPA parse error at line {line}: {message}")]
    ArpaParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
