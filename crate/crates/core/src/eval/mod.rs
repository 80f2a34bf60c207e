//! Evaluation harness: the model-by-level perplexity matrix, per-position
//! surprisal curves, selector accuracy tables, and top-k prediction accuracy
//! curves for both prediction modes.

pub mod report;
mod synth;

pub use report::{export_report, read_report_json, EvalReport, ReportFormat};
pub use synth::{generate_synthetic, MidgameNoise, SyntheticSpec};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lm::LmError;
use crate::pgn::RatingLevel;
use crate::predictor::{hit, predict_global, predict_selected, PredictionMode};
use crate::selector::{classify, ModelBank};

/// A corpus is a list of games; a game is a list of half-move tokens.
pub type Corpus = Vec<Vec<String>>;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("missing test set for level {0}")]
    MissingInput(RatingLevel),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Lm(#[from] LmError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("report parse error: {0}")]
    ReportParse(String),
}

/// Accuracy tally for one slice of games.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
}

impl Accuracy {
    fn from_counts(correct: u64, total: u64) -> Accuracy {
        Accuracy {
            correct,
            total,
            accuracy: if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            },
        }
    }
}

/// One classified game in the selector log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub game: String,
    pub true_level: RatingLevel,
    pub k: usize,
    pub predicted: RatingLevel,
}

/// Selector performance at one prefix length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorAccuracy {
    pub k: usize,
    pub per_level: BTreeMap<RatingLevel, Accuracy>,
    pub overall: Accuracy,
    /// Mean absolute ordinal distance between predicted and true level.
    pub avg_error: f64,
}

/// One position of a per-model mean-surprisal curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurprisalPoint {
    pub position: usize,
    pub mean_bits: f64,
    /// Games long enough to contribute at this position.
    pub games: u64,
}

/// One grid point of a prediction-accuracy curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    /// Prefix length: predictions condition on the first `h` half-moves and
    /// score position `h + 1`.
    pub h: usize,
    pub hits: u64,
    pub total: u64,
    /// `None` when no game was long enough — flagged, never fabricated.
    pub accuracy: Option<f64>,
}

/// A full accuracy curve for one mode and one k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCurve {
    pub mode: PredictionMode,
    pub topk: usize,
    pub points: Vec<AccuracyPoint>,
}

fn require_all_levels<'a>(
    testsets: &'a BTreeMap<RatingLevel, Corpus>,
) -> Result<&'a BTreeMap<RatingLevel, Corpus>, EvalError> {
    for level in RatingLevel::ALL {
        if !testsets.contains_key(&level) {
            return Err(EvalError::MissingInput(level));
        }
    }
    Ok(testsets)
}

/// The 7×7 perplexity matrix: entry `(i, j)` is the perplexity of model
/// `L(i+1)` on the level-`L(j+1)` test set — rows are model levels, columns
/// game levels.
pub fn perplexity_matrix(
    bank: &ModelBank,
    testsets: &BTreeMap<RatingLevel, Corpus>,
) -> Result<[[f64; 7]; 7], EvalError> {
    require_all_levels(testsets)?;
    let mut matrix = [[0.0; 7]; 7];
    for (model_level, model) in bank.iter() {
        for game_level in RatingLevel::ALL {
            matrix[model_level.index()][game_level.index()] =
                model.perplexity(&testsets[&game_level])?;
        }
    }
    Ok(matrix)
}

/// Mean surprisal by position, per model, over one test set.
///
/// Position `p`'s mean is taken over the games of length at least `p`; the
/// curve stops at the horizon or the longest game, whichever comes first,
/// and reports the contributing game count at every position.
pub fn avg_move_surprisal(
    bank: &ModelBank,
    testset: &Corpus,
    horizon: usize,
) -> BTreeMap<RatingLevel, Vec<SurprisalPoint>> {
    assert!(horizon >= 1, "horizon must be at least 1");
    let mut curves = BTreeMap::new();
    for (level, model) in bank.iter() {
        let longest = testset.iter().map(Vec::len).max().unwrap_or(0);
        let depth = horizon.min(longest);
        let mut sums = vec![0.0f64; depth];
        let mut counts = vec![0u64; depth];
        for game in testset {
            let trace = model.score_game(game);
            for point in trace.points.iter().take(depth) {
                sums[point.position - 1] += point.bits;
                counts[point.position - 1] += 1;
            }
        }
        let curve = (0..depth)
            .map(|i| SurprisalPoint {
                position: i + 1,
                mean_bits: if counts[i] == 0 { 0.0 } else { sums[i] / counts[i] as f64 },
                games: counts[i],
            })
            .collect();
        curves.insert(level, curve);
    }
    curves
}

/// Classify every game of every test set at prefix `k`, producing the
/// per-game log that the accuracy table and average error derive from.
pub fn classification_log(
    bank: &ModelBank,
    testsets: &BTreeMap<RatingLevel, Corpus>,
    k: usize,
) -> Result<Vec<ClassificationRecord>, EvalError> {
    require_all_levels(testsets)?;
    let mut log = Vec::new();
    for level in RatingLevel::ALL {
        for (i, game) in testsets[&level].iter().enumerate() {
            if game.is_empty() {
                continue;
            }
            let result = classify(bank, game, k).expect("non-empty game");
            log.push(ClassificationRecord {
                game: format!("{level}#{i}"),
                true_level: level,
                k,
                predicted: result.predicted,
            });
        }
    }
    Ok(log)
}

/// Per-level and overall selector accuracy at prefix `k`. The overall figure
/// is the game-count-weighted mean of the per-level accuracies.
pub fn selector_accuracy(
    bank: &ModelBank,
    testsets: &BTreeMap<RatingLevel, Corpus>,
    k: usize,
) -> Result<SelectorAccuracy, EvalError> {
    let log = classification_log(bank, testsets, k)?;
    Ok(selector_accuracy_from_log(&log, k))
}

/// Derive the accuracy table from an existing classification log.
pub fn selector_accuracy_from_log(log: &[ClassificationRecord], k: usize) -> SelectorAccuracy {
    let mut per_level_counts: BTreeMap<RatingLevel, (u64, u64)> =
        RatingLevel::ALL.iter().map(|&l| (l, (0, 0))).collect();
    let mut error_sum = 0u64;
    for record in log {
        let slot = per_level_counts.get_mut(&record.true_level).unwrap();
        slot.1 += 1;
        if record.predicted == record.true_level {
            slot.0 += 1;
        }
        error_sum += record
            .predicted
            .ordinal()
            .abs_diff(record.true_level.ordinal()) as u64;
    }
    let (correct, total) = per_level_counts
        .values()
        .fold((0, 0), |(c, t), &(lc, lt)| (c + lc, t + lt));
    SelectorAccuracy {
        k,
        per_level: per_level_counts
            .into_iter()
            .map(|(l, (c, t))| (l, Accuracy::from_counts(c, t)))
            .collect(),
        overall: Accuracy::from_counts(correct, total),
        avg_error: if total == 0 {
            0.0
        } else {
            error_sum as f64 / total as f64
        },
    }
}

/// Mean absolute ordinal error of the classifier at prefix `k`.
pub fn classifier_avg_error(
    bank: &ModelBank,
    testsets: &BTreeMap<RatingLevel, Corpus>,
    k: usize,
) -> Result<f64, EvalError> {
    Ok(selector_accuracy(bank, testsets, k)?.avg_error)
}

/// Top-k prediction accuracy over a grid of prefix lengths.
///
/// At each prefix length `h`, every game longer than `h` half-moves yields
/// exactly one scored prediction: condition on the first `h` half-moves
/// (classifying on that same prefix in selector-assisted mode) and test
/// whether position `h + 1` appears among the top-k candidates.
pub fn topk_accuracy_curve(
    bank: &ModelBank,
    testsets: &BTreeMap<RatingLevel, Corpus>,
    mode: PredictionMode,
    topk: usize,
    grid: &[usize],
) -> Result<AccuracyCurve, EvalError> {
    require_all_levels(testsets)?;
    assert!(grid.iter().all(|&h| h >= 1), "grid values must be at least 1");
    let mut points = Vec::with_capacity(grid.len());
    for &h in grid {
        let (mut hits, mut total) = (0u64, 0u64);
        for level in RatingLevel::ALL {
            for game in &testsets[&level] {
                if game.len() <= h {
                    continue;
                }
                let prefix = &game[..h];
                let prediction = match mode {
                    PredictionMode::SelectorAssisted => {
                        predict_selected(bank, prefix, h, topk, None).expect("non-empty prefix")
                    }
                    PredictionMode::GlobalBenchmark => {
                        predict_global(bank, prefix, topk).expect("non-empty prefix")
                    }
                };
                total += 1;
                if hit(&prediction, &game[h]) {
                    hits += 1;
                }
            }
        }
        points.push(AccuracyPoint {
            h,
            hits,
            total,
            accuracy: (total > 0).then(|| hits as f64 / total as f64),
        });
    }
    Ok(AccuracyCurve { mode, topk, points })
}

/// Everything `run_eval` needs beyond the bank and test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Selector prefix lengths for the accuracy table.
    pub ks: Vec<usize>,
    /// Top-k widths for the prediction curves.
    pub topks: Vec<usize>,
    /// Prefix-length grid for the prediction curves.
    pub grid: Vec<usize>,
    /// Horizon for the per-position surprisal curves.
    pub horizon: usize,
    /// Test set whose games feed the surprisal curves.
    pub surprisal_level: RatingLevel,
    /// Echoed into the report for provenance.
    pub datasets: BTreeMap<String, String>,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ks: vec![16, 100],
            topks: vec![1, 3],
            grid: vec![2, 4, 8, 16, 30, 50, 70, 100],
            horizon: 100,
            surprisal_level: RatingLevel::L1,
            datasets: BTreeMap::new(),
            seed: 0,
        }
    }
}

/// Run the full evaluation suite and assemble the report.
pub fn run_eval(
    bank: &ModelBank,
    testsets: &BTreeMap<RatingLevel, Corpus>,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    require_all_levels(testsets)?;
    let matrix = perplexity_matrix(bank, testsets)?;

    let mut selector = Vec::new();
    let mut selector_log = Vec::new();
    for &k in &config.ks {
        let log = classification_log(bank, testsets, k)?;
        selector.push(selector_accuracy_from_log(&log, k));
        selector_log.extend(log);
    }

    let surprisal_curves = avg_move_surprisal(
        bank,
        &testsets[&config.surprisal_level],
        config.horizon,
    );

    let mut accuracy_curves = Vec::new();
    for &topk in &config.topks {
        for mode in [PredictionMode::SelectorAssisted, PredictionMode::GlobalBenchmark] {
            accuracy_curves.push(topk_accuracy_curve(bank, testsets, mode, topk, &config.grid)?);
        }
    }

    Ok(EvalReport {
        config: config.clone(),
        model_order: bank.model(RatingLevel::L1).order(),
        perplexity_matrix: matrix.iter().map(|row| row.to_vec()).collect(),
        selector,
        selector_log,
        surprisal_testset: config.surprisal_level,
        surprisal_curves,
        accuracy_curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{count_ngrams, estimate, NGramModel, SmoothingConfig};

    fn model_from(corpus: &Corpus, order: usize) -> NGramModel {
        let counts = count_ngrams(corpus, order).unwrap();
        estimate(&counts, &SmoothingConfig::default()).unwrap().model
    }

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    /// Disjoint seven-dialect corpora and the bank trained on them.
    fn disjoint_setup(games: usize) -> (ModelBank, BTreeMap<RatingLevel, Corpus>) {
        let mut testsets = BTreeMap::new();
        let mut models = Vec::new();
        for level in RatingLevel::ALL {
            let a = format!("a{}", level.ordinal());
            let b = format!("b{}", level.ordinal());
            let corpus: Corpus = (0..games)
                .map(|i| {
                    if i % 2 == 0 {
                        vec![a.clone(), b.clone(), a.clone()]
                    } else {
                        vec![b.clone(), a.clone(), b.clone()]
                    }
                })
                .collect();
            models.push((level, model_from(&corpus, 2)));
            testsets.insert(level, corpus);
        }
        (ModelBank::new(models).unwrap(), testsets)
    }

    #[test]
    fn self_trained_matrix_has_diagonal_row_argmin() {
        let (bank, testsets) = disjoint_setup(6);
        let matrix = perplexity_matrix(&bank, &testsets).unwrap();
        for (i, row) in matrix.iter().enumerate() {
            let argmin = row
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmin, i, "row {i}: {row:?}");
            assert!(row.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn identical_corpora_give_identical_rows() {
        let corpus: Corpus = vec![toks(&["x", "y", "z"]), toks(&["y", "x"])];
        let models = RatingLevel::ALL.iter().map(|&l| (l, model_from(&corpus, 2))).collect();
        let bank = ModelBank::new(models).unwrap();
        let testsets: BTreeMap<_, _> =
            RatingLevel::ALL.iter().map(|&l| (l, corpus.clone())).collect();
        let matrix = perplexity_matrix(&bank, &testsets).unwrap();
        for row in &matrix[1..] {
            assert_eq!(row, &matrix[0]);
        }
    }

    #[test]
    fn missing_test_set_is_reported() {
        let (bank, mut testsets) = disjoint_setup(4);
        testsets.remove(&RatingLevel::L4);
        assert!(matches!(
            perplexity_matrix(&bank, &testsets),
            Err(EvalError::MissingInput(RatingLevel::L4))
        ));
    }

    #[test]
    fn single_game_curve_equals_its_trace() {
        let (bank, _) = disjoint_setup(4);
        let game = toks(&["a1", "b1", "a1"]);
        let curves = avg_move_surprisal(&bank, &vec![game.clone()], 100);
        let trace = bank.model(RatingLevel::L1).score_game(&game);
        let curve = &curves[&RatingLevel::L1];
        assert_eq!(curve.len(), 3);
        for (point, trace_point) in curve.iter().zip(&trace.points) {
            assert_eq!(point.games, 1);
            assert!((point.mean_bits - trace_point.bits).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_truncates_at_longest_game_with_counts() {
        let (bank, _) = disjoint_setup(4);
        let testset = vec![toks(&["a1", "b1"]), toks(&["a1", "b1", "a1", "b1"])];
        let curves = avg_move_surprisal(&bank, &testset, 100);
        let curve = &curves[&RatingLevel::L1];
        assert_eq!(curve.len(), 4);
        assert_eq!(curve[0].games, 2);
        assert_eq!(curve[1].games, 2);
        assert_eq!(curve[2].games, 1);
        assert_eq!(curve[3].games, 1);
    }

    #[test]
    fn self_trained_disjoint_dialects_classify_perfectly() {
        let (bank, testsets) = disjoint_setup(6);
        let table = selector_accuracy(&bank, &testsets, 16).unwrap();
        assert_eq!(table.overall.accuracy, 1.0);
        assert_eq!(table.avg_error, 0.0);
        for acc in table.per_level.values() {
            assert_eq!(acc.accuracy, 1.0);
        }
    }

    #[test]
    fn overall_accuracy_is_count_weighted_mean() {
        let (bank, mut testsets) = disjoint_setup(6);
        // Unbalance the level populations.
        testsets.get_mut(&RatingLevel::L2).unwrap().truncate(2);
        let table = selector_accuracy(&bank, &testsets, 16).unwrap();
        let weighted: f64 = table
            .per_level
            .values()
            .map(|a| a.accuracy * a.total as f64)
            .sum::<f64>()
            / table.per_level.values().map(|a| a.total).sum::<u64>() as f64;
        assert!((table.overall.accuracy - weighted).abs() < 1e-12);
    }

    /// A bank whose L1 model was trained on the shared dialect while the
    /// other six saw something disjoint: every game classifies as L1.
    #[test]
    fn degenerate_bank_always_predicts_l1() {
        let shared: Corpus = (0..6)
            .map(|i| if i % 2 == 0 { toks(&["s", "t", "s"]) } else { toks(&["t", "s", "t"]) })
            .collect();
        let other: Corpus = (0..6).map(|_| toks(&["q", "r", "q"])).collect();
        let models = RatingLevel::ALL
            .iter()
            .map(|&l| {
                let corpus = if l == RatingLevel::L1 { &shared } else { &other };
                (l, model_from(corpus, 2))
            })
            .collect();
        let bank = ModelBank::new(models).unwrap();
        let testsets: BTreeMap<_, _> =
            RatingLevel::ALL.iter().map(|&l| (l, shared.clone())).collect();

        let table = selector_accuracy(&bank, &testsets, 16).unwrap();
        // Only L1 games are classified correctly…
        assert_eq!(table.per_level[&RatingLevel::L1].accuracy, 1.0);
        assert_eq!(table.overall.correct, 6);
        // …and the mean ordinal error over a uniform level mix is
        // (0+1+2+3+4+5+6)/7 = 3.
        assert!((table.avg_error - 3.0).abs() < 1e-12);
    }

    #[test]
    fn avg_error_matches_recomputation_from_log() {
        let (bank, testsets) = disjoint_setup(5);
        let log = classification_log(&bank, &testsets, 2).unwrap();
        let reported = classifier_avg_error(&bank, &testsets, 2).unwrap();
        let recomputed: f64 = log
            .iter()
            .map(|r| r.predicted.ordinal().abs_diff(r.true_level.ordinal()) as f64)
            .sum::<f64>()
            / log.len() as f64;
        assert!((reported - recomputed).abs() < 1e-12);
    }

    #[test]
    fn accuracy_curve_flags_empty_populations() {
        let (bank, testsets) = disjoint_setup(4);
        // Games are 3 half-moves long: h = 3 leaves nothing to predict.
        let curve = topk_accuracy_curve(
            &bank,
            &testsets,
            PredictionMode::SelectorAssisted,
            1,
            &[1, 2, 3],
        )
        .unwrap();
        assert_eq!(curve.points[0].total, 28);
        assert!(curve.points[0].accuracy.is_some());
        assert_eq!(curve.points[2].total, 0);
        assert_eq!(curve.points[2].accuracy, None);
    }

    #[test]
    fn top3_accuracy_dominates_top1() {
        let spec = SyntheticSpec {
            games_per_level: 12,
            min_len: 10,
            max_len: 14,
            ..SyntheticSpec::dialects(14, 12, 5)
        };
        let corpora = generate_synthetic(&spec).unwrap();
        let models = RatingLevel::ALL
            .iter()
            .map(|&l| (l, model_from(&corpora[&l], 2)))
            .collect();
        let bank = ModelBank::new(models).unwrap();
        let grid = [2, 4, 8];
        for mode in [PredictionMode::SelectorAssisted, PredictionMode::GlobalBenchmark] {
            let top1 = topk_accuracy_curve(&bank, &corpora, mode, 1, &grid).unwrap();
            let top3 = topk_accuracy_curve(&bank, &corpora, mode, 3, &grid).unwrap();
            for (p1, p3) in top1.points.iter().zip(&top3.points) {
                assert!(p3.hits >= p1.hits, "{mode:?} h={}", p1.h);
            }
        }
    }

    #[test]
    fn identical_models_make_modes_agree() {
        let corpus: Corpus = (0..8)
            .map(|i| if i % 2 == 0 { toks(&["x", "y", "z", "x"]) } else { toks(&["y", "z", "x", "y"]) })
            .collect();
        let models = RatingLevel::ALL.iter().map(|&l| (l, model_from(&corpus, 2))).collect();
        let bank = ModelBank::new(models).unwrap();
        let testsets: BTreeMap<_, _> =
            RatingLevel::ALL.iter().map(|&l| (l, corpus.clone())).collect();
        let grid = [1, 2, 3];
        for topk in [1, 3] {
            let selected = topk_accuracy_curve(
                &bank, &testsets, PredictionMode::SelectorAssisted, topk, &grid,
            )
            .unwrap();
            let benchmark = topk_accuracy_curve(
                &bank, &testsets, PredictionMode::GlobalBenchmark, topk, &grid,
            )
            .unwrap();
            assert_eq!(selected.points, benchmark.points);
        }
    }

    #[test]
    fn populations_decrease_monotonically_in_h() {
        let spec = SyntheticSpec {
            games_per_level: 10,
            min_len: 4,
            max_len: 20,
            ..SyntheticSpec::dialects(14, 10, 9)
        };
        let corpora = generate_synthetic(&spec).unwrap();
        let models = RatingLevel::ALL
            .iter()
            .map(|&l| (l, model_from(&corpora[&l], 2)))
            .collect();
        let bank = ModelBank::new(models).unwrap();
        let curve = topk_accuracy_curve(
            &bank,
            &corpora,
            PredictionMode::GlobalBenchmark,
            1,
            &[2, 4, 8, 16],
        )
        .unwrap();
        let totals: Vec<u64> = curve.points.iter().map(|p| p.total).collect();
        assert!(totals.windows(2).all(|w| w[0] >= w[1]), "{totals:?}");
    }
}
