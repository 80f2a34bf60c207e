//! The `chessgram` executable: every pipeline stage as a subcommand plus an
//! interactive analysis REPL.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. With `--error-json`,
//! failures additionally emit one machine-readable JSON object on stderr.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::ConfigMap;
use crate::eval::{
    export_report, generate_synthetic, run_eval, EvalConfig, MidgameNoise, ReportFormat,
    SyntheticSpec,
};
use crate::lm::{count_ngrams, estimate, read_arpa, write_arpa, SmoothingConfig};
use crate::pgn::{
    build_corpora, read_corpus, sample_split, stream_games, write_corpus, Compression,
    GameRecord, IngestError, LevelBins, RatingLevel, RawGame,
};
use crate::predictor::{predict_global, predict_selected, Candidate, PredictionMode};
use crate::selector::{classify, ModelBank};

#[derive(Parser)]
#[command(
    name = "chessgram",
    version,
    about = "Skill-stratified n-gram models over chess move sequences"
)]
struct Cli {
    /// Also print errors as a JSON object on stderr.
    #[arg(long, global = true)]
    error_json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream PGN archives into per-level corpora plus ingestion stats.
    Preprocess(PreprocessArgs),
    /// Train a model from a corpus file and write it as ARPA text.
    Train(TrainArgs),
    /// Score a corpus under one model: surprisal traces and perplexity.
    Score(ScoreArgs),
    /// Classify games into skill levels by cumulative surprisal.
    Classify(ClassifyArgs),
    /// Predict the next move for a prefix.
    Predict(PredictArgs),
    /// Run the evaluation suite and export the report.
    Eval(EvalArgs),
    /// Generate seeded synthetic per-level corpora.
    Synth(SynthArgs),
    /// Interactive session: enter half-moves, watch the classification and
    /// predictions evolve.
    Repl(ReplArgs),
}

#[derive(Args)]
struct PreprocessArgs {
    /// PGN archive(s), plain or zstd-compressed. Repeatable.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Directory for the per-level corpus files.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value = "auto")]
    compression: Compression,
    /// Rating-boundary override file: six ascending numbers.
    #[arg(long)]
    bins: Option<PathBuf>,
    /// Sample this fraction of each level into L*.train.txt.
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Sample this many games of each level into L*.test.txt.
    #[arg(long)]
    test_count: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Where to write the ingestion stats JSON (stdout by default).
    #[arg(long)]
    stats_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus file: one game per line, space-separated tokens.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    order: usize,
    /// Output ARPA file.
    #[arg(long)]
    out: PathBuf,
    /// Discount used when count-of-count statistics are degenerate.
    #[arg(long, default_value_t = 0.75)]
    fallback_discount: f64,
}

#[derive(Args)]
struct ScoreArgs {
    /// ARPA model file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Write per-game trace JSON lines here instead of stdout.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Suppress per-game traces; print only the summary.
    #[arg(long)]
    summary_only: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Directory holding L1.arpa … L7.arpa.
    #[arg(long)]
    bank: PathBuf,
    /// Corpus file of games to classify.
    #[arg(long)]
    games: PathBuf,
    /// Half-moves of prefix to aggregate.
    #[arg(long, default_value_t = 16)]
    k: usize,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    bank: PathBuf,
    /// Space-separated move prefix, e.g. "e4 e5 Nf3".
    #[arg(long)]
    prefix: String,
    #[arg(long, default_value_t = 16)]
    selector_k: usize,
    #[arg(long, default_value_t = 3)]
    topk: usize,
    /// selected (skill-matched model) or benchmark (global confidence).
    #[arg(long, default_value = "selected")]
    mode: PredictionMode,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    bank: PathBuf,
    /// Directory holding L1.txt … L7.txt test corpora.
    #[arg(long)]
    testsets: PathBuf,
    /// Key-value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Selector prefix lengths, comma-separated.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Top-k widths for prediction curves, comma-separated.
    #[arg(long, value_delimiter = ',')]
    topk: Option<Vec<usize>>,
    /// Prefix-length grid for prediction curves, comma-separated.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Test set for the per-position surprisal curves.
    #[arg(long)]
    surprisal_level: Option<RatingLevel>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Report file (json) or directory (csv).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    /// Key-value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    games_per_level: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alphabet_size: Option<usize>,
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    /// Noise-free level-specific opening length.
    #[arg(long)]
    opening_len: Option<usize>,
    /// Seven per-level noise rates, comma-separated.
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<f64>>,
    /// Extra midgame noise as from,to,rate.
    #[arg(long)]
    midgame: Option<String>,
}

#[derive(Args)]
struct ReplArgs {
    #[arg(long)]
    bank: PathBuf,
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    topk: usize,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

macro_rules! data_error_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_error_from!(
    io::Error,
    crate::pgn::IngestError,
    crate::lm::LmError,
    crate::eval::EvalError,
    crate::selector::SelectorError,
    crate::predictor::PredictError
);

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Entry point: parse, dispatch, map errors to exit codes.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (including --help/--version,
            // which are not errors).
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let error_json = cli.error_json;
    let result = match cli.command {
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Train(args) => cmd_train(args),
        Command::Score(args) => cmd_score(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Repl(args) => cmd_repl(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            if error_json {
                eprintln!(
                    "{}",
                    serde_json::json!({"error": {"kind": e.kind(), "message": e.message()}})
                );
            }
            e.exit_code()
        }
    }
}

fn load_bank(dir: &Path) -> Result<ModelBank, CliError> {
    let mut models = Vec::new();
    for level in RatingLevel::ALL {
        let path = dir.join(format!("{level}.arpa"));
        let file = fs::File::open(&path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let model = read_arpa(io::BufReader::new(file))
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        models.push((level, model));
    }
    Ok(ModelBank::new(models)?)
}

fn load_testsets(dir: &Path) -> Result<BTreeMap<RatingLevel, Vec<Vec<String>>>, CliError> {
    let mut testsets = BTreeMap::new();
    for level in RatingLevel::ALL {
        let path = dir.join(format!("{level}.txt"));
        let file = fs::File::open(&path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        testsets.insert(level, read_corpus(file)?);
    }
    Ok(testsets)
}

fn read_corpus_file(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let file =
        fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(read_corpus(file)?)
}

fn cmd_preprocess(args: PreprocessArgs) -> Result<(), CliError> {
    if let Some(f) = args.train_fraction {
        if !(f > 0.0 && f <= 1.0) {
            return Err(CliError::Usage(format!(
                "--train-fraction must be in (0, 1], got {f}"
            )));
        }
    }
    let bins = match &args.bins {
        Some(path) => LevelBins::parse(&fs::read_to_string(path)?)?,
        None => LevelBins::default(),
    };

    let mut raw_games: Vec<RawGame> = Vec::new();
    for input in &args.input {
        let compression = match args.compression {
            Compression::Auto => {
                if input.extension().is_some_and(|e| e == "zst") {
                    Compression::Zstd
                } else {
                    Compression::Auto
                }
            }
            other => other,
        };
        let file = fs::File::open(input)
            .map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
        for game in stream_games(file, compression)? {
            raw_games.push(game?);
        }
    }
    let (corpora, stats) = build_corpora(raw_games, &bins);

    fs::create_dir_all(&args.out_dir)?;
    for level in RatingLevel::ALL {
        let empty = Vec::new();
        let records = corpora.get(&level).unwrap_or(&empty);
        match (args.train_fraction, args.test_count) {
            (None, None) => {
                write_records(&args.out_dir.join(format!("{level}.txt")), records)?;
            }
            (Some(fraction), test_count) => {
                let split = sample_split(records, fraction, test_count.unwrap_or(0), args.seed)?;
                write_records(&args.out_dir.join(format!("{level}.train.txt")), &split.train)?;
                if test_count.is_some() {
                    write_records(&args.out_dir.join(format!("{level}.test.txt")), &split.test)?;
                }
            }
            (None, Some(test_count)) => {
                // Test-only draw: deterministic shuffle, then take the head.
                let split = sample_split(records, 1.0, 0, args.seed)?;
                if test_count > split.train.len() {
                    return Err(IngestError::InsufficientGames {
                        requested: test_count,
                        available: split.train.len(),
                    }
                    .into());
                }
                write_records(
                    &args.out_dir.join(format!("{level}.test.txt")),
                    &split.train[..test_count],
                )?;
            }
        }
    }

    let stats_json = serde_json::to_string_pretty(&stats)
        .map_err(|e| CliError::Data(e.to_string()))?;
    match &args.stats_out {
        Some(path) => fs::write(path, stats_json + "\n")?,
        None => println!("{stats_json}"),
    }
    Ok(())
}

fn write_records(path: &Path, records: &[GameRecord]) -> Result<(), CliError> {
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    write_corpus(records, &mut file)?;
    file.flush()?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let corpus = read_corpus_file(&args.corpus)?;
    let counts = count_ngrams(&corpus, args.order)?;
    let config = SmoothingConfig {
        fallback_discount: args.fallback_discount,
        level_tag: None,
    };
    let estimation = estimate(&counts, &config)?;
    for order in &estimation.fallback_orders {
        eprintln!(
            "warning: degenerate count-of-counts at order {order}; using fallback discount {}",
            args.fallback_discount
        );
    }
    let mut out = io::BufWriter::new(fs::File::create(&args.out)?);
    write_arpa(&estimation.model, &mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TraceLine<'a> {
    game: String,
    model: Option<RatingLevel>,
    tokens: usize,
    total_bits: f64,
    per_token: &'a [f64],
}

fn cmd_score(args: ScoreArgs) -> Result<(), CliError> {
    let file = fs::File::open(&args.model)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.model.display())))?;
    let mut model = read_arpa(io::BufReader::new(file))?;
    // Infer the level tag from a file stem like "L3".
    if let Some(level) = args
        .model
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse::<RatingLevel>().ok())
    {
        model.set_level_tag(Some(level));
    }
    let corpus = read_corpus_file(&args.corpus)?;

    let stdout = io::stdout();
    let mut trace_sink: Box<dyn Write> = match &args.traces {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(stdout.lock()),
    };
    for (i, game) in corpus.iter().enumerate() {
        let trace = model.score_game(game);
        if !args.summary_only {
            let bits: Vec<f64> = trace.points.iter().map(|p| p.bits).collect();
            let line = TraceLine {
                game: format!("g{}", i + 1),
                model: model.level_tag(),
                tokens: trace.token_count,
                total_bits: trace.total_bits,
                per_token: &bits,
            };
            writeln!(
                trace_sink,
                "{}",
                serde_json::to_string(&line).map_err(|e| CliError::Data(e.to_string()))?
            )?;
        }
    }
    trace_sink.flush()?;
    drop(trace_sink);

    let perplexity = model.perplexity(&corpus)?;
    let summary = serde_json::json!({
        "games": corpus.len(),
        "tokens": corpus.iter().map(Vec::len).sum::<usize>(),
        "perplexity": perplexity,
    });
    println!("{summary}");
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), CliError> {
    if args.k < 1 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let bank = load_bank(&args.bank)?;
    let games = read_corpus_file(&args.games)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (i, game) in games.iter().enumerate() {
        let result = classify(&bank, game, args.k)?;
        let line = serde_json::json!({
            "game": format!("g{}", i + 1),
            "k": args.k,
            "totals_bits": result.totals_bits,
            "predicted": result.predicted,
            "prefix_used": result.prefix_used,
        });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictOutput {
    mode: PredictionMode,
    selected_level: Option<RatingLevel>,
    prefix_len: usize,
    topk: usize,
    candidates: Vec<Candidate>,
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    if args.topk < 1 || args.selector_k < 1 {
        return Err(CliError::Usage("--topk and --selector-k must be at least 1".into()));
    }
    let bank = load_bank(&args.bank)?;
    let prefix: Vec<String> = args
        .prefix
        .split_whitespace()
        .map(str::to_string)
        .collect();
    let result = match args.mode {
        PredictionMode::SelectorAssisted => {
            predict_selected(&bank, &prefix, args.selector_k, args.topk, None)?
        }
        PredictionMode::GlobalBenchmark => predict_global(&bank, &prefix, args.topk)?,
    };
    let output = PredictOutput {
        mode: result.mode,
        selected_level: result.selected_level,
        prefix_len: prefix.len(),
        topk: result.k,
        candidates: result.candidates,
    };
    println!(
        "{}",
        serde_json::to_string(&output).map_err(|e| CliError::Data(e.to_string()))?
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let file_config = match &args.config {
        Some(path) => ConfigMap::parse(&fs::read_to_string(path)?)?,
        None => ConfigMap::default(),
    };
    let defaults = EvalConfig::default();
    let config = EvalConfig {
        ks: args
            .k
            .or(file_config.get_list("ks", "integer")?)
            .unwrap_or(defaults.ks),
        topks: args
            .topk
            .or(file_config.get_list("topks", "integer")?)
            .unwrap_or(defaults.topks),
        grid: args
            .grid
            .or(file_config.get_list("grid", "integer")?)
            .unwrap_or(defaults.grid),
        horizon: args
            .horizon
            .or(file_config.get("horizon", "integer")?)
            .unwrap_or(defaults.horizon),
        surprisal_level: args
            .surprisal_level
            .or(file_config.get("surprisal_level", "rating level")?)
            .unwrap_or(defaults.surprisal_level),
        datasets: BTreeMap::from([
            ("bank".to_string(), args.bank.display().to_string()),
            ("testsets".to_string(), args.testsets.display().to_string()),
        ]),
        seed: args
            .seed
            .or(file_config.get("seed", "integer")?)
            .unwrap_or(defaults.seed),
    };
    if config.ks.iter().any(|&k| k < 1)
        || config.grid.iter().any(|&h| h < 1)
        || config.topks.iter().any(|&t| t < 1)
        || config.horizon < 1
    {
        return Err(CliError::Usage(
            "ks, grid, topks, and horizon must all be at least 1".into(),
        ));
    }

    let bank = load_bank(&args.bank)?;
    let testsets = load_testsets(&args.testsets)?;
    let report = run_eval(&bank, &testsets, &config)?;
    export_report(&report, args.format, &args.out)?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let file_config = match &args.config {
        Some(path) => ConfigMap::parse(&fs::read_to_string(path)?)?,
        None => ConfigMap::default(),
    };
    let games_per_level = args
        .games_per_level
        .or(file_config.get("games_per_level", "integer")?)
        .unwrap_or(1000);
    let seed = args
        .seed
        .or(file_config.get("seed", "integer")?)
        .unwrap_or(7);
    let alphabet_size = args
        .alphabet_size
        .or(file_config.get("alphabet_size", "integer")?)
        .unwrap_or(48);

    let mut spec = SyntheticSpec::dialects(alphabet_size, games_per_level, seed);
    if let Some(v) = args.min_len.or(file_config.get("min_len", "integer")?) {
        spec.min_len = v;
    }
    if let Some(v) = args.max_len.or(file_config.get("max_len", "integer")?) {
        spec.max_len = v;
    }
    if let Some(v) = args
        .opening_len
        .or(file_config.get("opening_len", "integer")?)
    {
        spec.opening_len = v;
    }
    if let Some(noise) = args.noise.or(file_config.get_list("noise", "number")?) {
        if noise.len() != 7 {
            return Err(CliError::Usage(format!(
                "--noise needs exactly 7 rates, got {}",
                noise.len()
            )));
        }
        spec.noise = noise.try_into().unwrap();
    }
    let midgame_text = args
        .midgame
        .or(file_config.raw("midgame").map(str::to_string));
    if let Some(text) = midgame_text {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let parsed = (parts.len() == 3)
            .then(|| {
                Some(MidgameNoise {
                    from: parts[0].parse().ok()?,
                    to: parts[1].parse().ok()?,
                    rate: parts[2].parse().ok()?,
                })
            })
            .flatten();
        match parsed {
            Some(m) => spec.midgame = Some(m),
            None => {
                return Err(CliError::Usage(format!(
                    "--midgame expects from,to,rate; got {text:?}"
                )))
            }
        }
    }

    let corpora = generate_synthetic(&spec)?;
    fs::create_dir_all(&args.out_dir)?;
    for (level, corpus) in &corpora {
        let path = args.out_dir.join(format!("{level}.txt"));
        let mut file = io::BufWriter::new(fs::File::create(path)?);
        for game in corpus {
            writeln!(file, "{}", game.join(" "))?;
        }
        file.flush()?;
    }
    Ok(())
}

fn cmd_repl(args: ReplArgs) -> Result<(), CliError> {
    if args.k < 1 || args.topk < 1 {
        return Err(CliError::Usage("--k and --topk must be at least 1".into()));
    }
    let bank = load_bank(&args.bank)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut moves: Vec<String> = Vec::new();

    writeln!(out, "chessgram repl: enter half-moves; undo / reset / quit")?;
    for line in stdin.lock().lines() {
        let line = line?;
        let entry = line.trim();
        match entry {
            "" => continue,
            "quit" | "exit" => break,
            "undo" => {
                if moves.pop().is_none() {
                    writeln!(out, "nothing to undo")?;
                    continue;
                }
            }
            "reset" => {
                moves.clear();
                writeln!(out, "position reset")?;
                continue;
            }
            _ => moves.extend(entry.split_whitespace().map(str::to_string)),
        }
        if moves.is_empty() {
            writeln!(out, "no moves entered")?;
            continue;
        }
        print_repl_state(&mut out, &bank, &moves, args.k, args.topk)?;
    }
    Ok(())
}

fn print_repl_state<W: Write>(
    out: &mut W,
    bank: &ModelBank,
    moves: &[String],
    k: usize,
    topk: usize,
) -> Result<(), CliError> {
    let result = classify(bank, moves, k)?;
    writeln!(out, "[{}] {}", moves.len(), moves.join(" "))?;
    let totals: Vec<String> = result
        .totals_bits
        .iter()
        .map(|(level, bits)| format!("{level}={bits:.3}"))
        .collect();
    writeln!(out, "  totals_bits  {}", totals.join(" "))?;
    writeln!(
        out,
        "  predicted    {}  (k={}, prefix_used={})",
        result.predicted, k, result.prefix_used
    )?;
    let selected = predict_selected(bank, moves, k, topk, None)?;
    let fmt_selected: Vec<String> = selected
        .candidates
        .iter()
        .map(|c| format!("{}={:.4}", c.token, c.p))
        .collect();
    writeln!(out, "  selected     {}", fmt_selected.join(" "))?;
    let benchmark = predict_global(bank, moves, topk)?;
    let fmt_benchmark: Vec<String> = benchmark
        .candidates
        .iter()
        .map(|c| format!("{}={:.4}({})", c.token, c.p, c.level))
        .collect();
    writeln!(out, "  benchmark    {}", fmt_benchmark.join(" "))?;
    Ok(())
}
