//! ARPA text interchange: canonical writer and tolerant reader.
//!
//! Layout: a `\data\` section declaring per-order entry counts, one
//! `\N-grams:` section per order with `log10prob<TAB>tokens[<TAB>log10bow]`
//! lines, and a closing `\end\`. The writer is canonical — entries sorted by
//! token strings, floats at a fixed seven significant digits — so writing,
//! reading, and writing again is byte-identical.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};

use super::counts::Gram;
use super::model::{Entry, NGramModel};
use super::vocab::{TokenId, Vocabulary};
use super::LmError;

/// Render a log value with seven significant digits, stable under
/// parse-and-reformat.
pub(crate) fn format_log(value: f64) -> String {
    let value = if value == 0.0 { 0.0 } else { value }; // normalize -0.0
    if !value.is_finite() {
        // Stored models never hold non-finite logs; guard for hand-built ones.
        return if value < 0.0 { "-99.00000".into() } else { "0.000000".into() };
    }
    let mut v = value;
    loop {
        let magnitude = if v == 0.0 { 0 } else { v.abs().log10().floor() as i32 };
        let decimals = (6 - magnitude).clamp(0, 17) as usize;
        let s = format!("{value:.decimals$}");
        let reparsed: f64 = s.parse().unwrap();
        let new_magnitude = if reparsed == 0.0 {
            0
        } else {
            reparsed.abs().log10().floor() as i32
        };
        if new_magnitude == magnitude || reparsed == 0.0 {
            return s;
        }
        // Rounding changed the digit count (e.g. -0.9999999995 → -1.0);
        // reformat against the rounded value.
        v = reparsed;
    }
}

/// Write a model in canonical ARPA form.
pub fn write_arpa<W: Write>(model: &NGramModel, sink: &mut W) -> Result<(), LmError> {
    let counts = model.gram_counts();
    writeln!(sink, "\\data\\")?;
    for (i, count) in counts.iter().enumerate() {
        writeln!(sink, "ngram {}={}", i + 1, count)?;
    }
    for n in 1..=model.order() {
        writeln!(sink)?;
        writeln!(sink, "\\{n}-grams:")?;
        let mut rows: Vec<(Vec<&str>, &Entry)> = model
            .entries_of_order(n)
            .map(|(gram, entry)| {
                let names: Vec<&str> = gram.iter().map(|&id| model.vocab().name(id)).collect();
                (names, entry)
            })
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        for (names, entry) in rows {
            write!(sink, "{}\t{}", format_log(entry.logp), names.join(" "))?;
            if let Some(bow) = entry.bow {
                write!(sink, "\t{}", format_log(bow))?;
            }
            writeln!(sink)?;
        }
    }
    writeln!(sink)?;
    writeln!(sink, "\\end\\")?;
    Ok(())
}

/// Read an ARPA file. Accepts the common interchange variations: space or
/// tab separators, arbitrary float formatting, and a missing backoff field
/// (weight 1).
pub fn read_arpa<R: Read>(source: R) -> Result<NGramModel, LmError> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines().enumerate();

    let parse_err = |line: usize, message: &str| LmError::ArpaParse {
        line: line + 1,
        message: message.to_string(),
    };

    // Preamble: find \data\.
    let mut declared: Vec<usize> = Vec::new();
    let mut found_data = false;
    let mut current = 0usize;
    for (i, line) in lines.by_ref() {
        current = i;
        let line = line?;
        let trimmed = line.trim();
        if trimmed == "\\data\\" {
            found_data = true;
            break;
        }
        if !trimmed.is_empty() {
            return Err(parse_err(i, "expected \\data\\ header"));
        }
    }
    if !found_data {
        return Err(parse_err(current, "missing \\data\\ header"));
    }

    // ngram N=count declarations.
    for (i, line) in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            break;
        }
        let rest = trimmed
            .strip_prefix("ngram ")
            .ok_or_else(|| parse_err(i, "expected `ngram N=count`"))?;
        let (n, count) = rest
            .split_once('=')
            .ok_or_else(|| parse_err(i, "expected `ngram N=count`"))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| parse_err(i, "bad ngram order"))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| parse_err(i, "bad ngram count"))?;
        if n != declared.len() + 1 {
            return Err(parse_err(i, "ngram orders must be consecutive from 1"));
        }
        declared.push(count);
    }
    if declared.is_empty() {
        return Err(parse_err(current, "no ngram declarations"));
    }

    let order = declared.len();
    let mut vocab = Vocabulary::new();
    let mut entries: Vec<HashMap<Gram, Entry>> = vec![HashMap::new(); order];
    let mut section: Option<usize> = None;
    let mut saw_end = false;

    for (i, line) in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "\\end\\" {
            saw_end = true;
            break;
        }
        if let Some(rest) = trimmed.strip_prefix('\\') {
            let n: usize = rest
                .strip_suffix("-grams:")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err(i, "unrecognized section header"))?;
            if n < 1 || n > order {
                return Err(parse_err(i, "section order out of range"));
            }
            section = Some(n);
            continue;
        }
        let n = section.ok_or_else(|| parse_err(i, "entry before any section header"))?;
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let has_bow = match fields.len() {
            len if len == n + 1 => false,
            len if len == n + 2 => true,
            _ => return Err(parse_err(i, "wrong field count for section order")),
        };
        let logp: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(i, "bad probability"))?;
        let bow = if has_bow {
            Some(
                fields[n + 1]
                    .parse::<f64>()
                    .map_err(|_| parse_err(i, "bad backoff weight"))?,
            )
        } else {
            None
        };
        let gram: Gram = fields[1..=n]
            .iter()
            .map(|tok| vocab.intern(tok))
            .collect::<Vec<TokenId>>()
            .into();
        entries[n - 1].insert(gram, Entry { logp, bow });
    }
    if !saw_end {
        return Err(parse_err(current, "missing \\end\\"));
    }
    for (n, &count) in declared.iter().enumerate() {
        if entries[n].len() != count {
            return Err(LmError::ArpaParse {
                line: 0,
                message: format!(
                    "declared {} {}-grams but parsed {}",
                    count,
                    n + 1,
                    entries[n].len()
                ),
            });
        }
    }
    Ok(NGramModel::from_parts(order, vocab, entries, None))
}
