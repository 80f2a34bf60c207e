//! Report assembly and export: one JSON document, or one CSV table per file.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    AccuracyCurve, ClassificationRecord, EvalConfig, EvalError, SelectorAccuracy, SurprisalPoint,
};
use crate::pgn::RatingLevel;
use crate::predictor::PredictionMode;

/// Everything the evaluation produced, in one deterministic document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub model_order: usize,
    /// Rows are model levels L1..L7, columns are game levels L1..L7.
    pub perplexity_matrix: Vec<Vec<f64>>,
    pub selector: Vec<SelectorAccuracy>,
    /// Per-game classifications backing the selector table.
    pub selector_log: Vec<ClassificationRecord>,
    pub surprisal_testset: RatingLevel,
    pub surprisal_curves: BTreeMap<RatingLevel, Vec<SurprisalPoint>>,
    pub accuracy_curves: Vec<AccuracyCurve>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// Serialize the report as pretty JSON with a trailing newline.
pub fn write_report_json<W: Write>(report: &EvalReport, sink: &mut W) -> Result<(), EvalError> {
    serde_json::to_writer_pretty(&mut *sink, report)
        .map_err(|e| EvalError::ReportParse(e.to_string()))?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Parse a report previously written by [`write_report_json`].
pub fn read_report_json<R: Read>(source: R) -> Result<EvalReport, EvalError> {
    serde_json::from_reader(source).map_err(|e| EvalError::ReportParse(e.to_string()))
}

/// Export the report. JSON writes a single document at `path`; CSV treats
/// `path` as a directory and writes one table per file.
pub fn export_report(
    report: &EvalReport,
    format: ReportFormat,
    path: &Path,
) -> Result<(), EvalError> {
    match format {
        ReportFormat::Json => {
            let mut file = fs::File::create(path)?;
            write_report_json(report, &mut file)
        }
        ReportFormat::Csv => write_report_csv(report, path),
    }
}

/// One CSV table per file in `dir`. Missing values (flagged curve points)
/// are written as empty fields, never as zeros.
pub fn write_report_csv(report: &EvalReport, dir: &Path) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;

    let mut matrix = String::from("model");
    for level in RatingLevel::ALL {
        matrix.push_str(&format!(",{level}"));
    }
    matrix.push('\n');
    for (i, row) in report.perplexity_matrix.iter().enumerate() {
        matrix.push_str(&format!("L{}", i + 1));
        for value in row {
            matrix.push_str(&format!(",{value}"));
        }
        matrix.push('\n');
    }
    fs::write(dir.join("perplexity_matrix.csv"), matrix)?;

    let mut selector = String::from("k,scope,correct,total,accuracy,avg_error\n");
    for table in &report.selector {
        for (level, acc) in &table.per_level {
            selector.push_str(&format!(
                "{},{level},{},{},{},\n",
                table.k, acc.correct, acc.total, acc.accuracy
            ));
        }
        selector.push_str(&format!(
            "{},overall,{},{},{},{}\n",
            table.k, table.overall.correct, table.overall.total, table.overall.accuracy,
            table.avg_error
        ));
    }
    fs::write(dir.join("selector.csv"), selector)?;

    let mut log = String::from("game,true_level,k,predicted\n");
    for record in &report.selector_log {
        log.push_str(&format!(
            "{},{},{},{}\n",
            record.game, record.true_level, record.k, record.predicted
        ));
    }
    fs::write(dir.join("selector_log.csv"), log)?;

    let mut surprisal = String::from("model,position,mean_bits,games\n");
    for (level, curve) in &report.surprisal_curves {
        for point in curve {
            surprisal.push_str(&format!(
                "{level},{},{},{}\n",
                point.position, point.mean_bits, point.games
            ));
        }
    }
    fs::write(dir.join("surprisal_curves.csv"), surprisal)?;

    let mut accuracy = String::from("mode,topk,h,hits,total,accuracy\n");
    for curve in &report.accuracy_curves {
        let mode = match curve.mode {
            PredictionMode::SelectorAssisted => "selector_assisted",
            PredictionMode::GlobalBenchmark => "global_benchmark",
        };
        for point in &curve.points {
            let value = point
                .accuracy
                .map(|a| a.to_string())
                .unwrap_or_default();
            accuracy.push_str(&format!(
                "{mode},{},{},{},{},{value}\n",
                curve.topk, point.h, point.hits, point.total
            ));
        }
    }
    fs::write(dir.join("accuracy_curves.csv"), accuracy)?;

    Ok(())
}
