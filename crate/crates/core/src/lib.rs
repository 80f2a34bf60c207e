//! Skill-stratified n-gram language models over chess move sequences.
//!
//! The pipeline: stream rated PGN archives into per-level move corpora
//! ([`pgn`]), train an order-N Kneser-Ney backoff model per level ([`lm`]),
//! classify a game prefix into a skill level by cumulative surprisal
//! ([`selector`]), predict next moves with the skill-matched model or a
//! global-confidence benchmark ([`predictor`]), and reproduce the evaluation
//! artifacts ([`eval`]). The `chessgram` binary exposes each stage as a
//! subcommand ([`cli`]).
//!
//! Moves are plain text tokens: no move legality is checked anywhere, so the
//! models are oblivious to the game state and happily rank moves a chess
//! engine would reject. Histories are limited to the model order.

pub mod cli;
pub mod config;
pub mod eval;
pub mod lm;
pub mod pgn;
pub mod predictor;
pub mod selector;

pub use eval::{EvalConfig, EvalReport};
pub use lm::NGramModel;
pub use pgn::{GameRecord, RatingLevel};
pub use predictor::{PredictionMode, PredictionResult};
pub use selector::{ModelBank, SelectorResult};
