//! Lexical movetext cleaning.
//!
//! Reduces a raw PGN game body to its mainline half-moves: comments,
//! variations, move numbers, NAGs, annotation suffixes, and the result
//! token are all stripped. Runs as a single byte-level pass so multi-
//! gigabyte archives stay cheap to process.

use super::IngestError;

/// Extract the mainline SAN half-moves from raw movetext.
///
/// Strips `{...}` comments (including `[%eval ...]` / `[%clk ...]` payloads),
/// `(...)` variations to arbitrary nesting depth, move numbers (`12.`,
/// `12...`, including glued forms like `12.e4`), NAGs (`$n`), trailing
/// `!`/`?` annotation suffixes, an `e.p.` suffix, and the result token.
///
/// Unbalanced braces or parentheses yield `MalformedMovetext` with the byte
/// position of the offending delimiter.
pub fn clean_movetext(movetext: &str) -> Result<Vec<String>, IngestError> {
    let bytes = movetext.as_bytes();
    let mut tokens = Vec::new();
    let mut token_start: Option<usize> = None;
    let mut paren_depth: u32 = 0;
    let mut last_open_paren = 0usize;
    let mut comment_open: Option<usize> = None;

    let flush = |start: Option<usize>, end: usize, tokens: &mut Vec<String>| {
        if let Some(s) = start {
            push_token(&movetext[s..end], tokens);
        }
    };

    for (i, &b) in bytes.iter().enumerate() {
        if comment_open.is_some() {
            if b == b'}' {
                comment_open = None;
            }
            continue;
        }
        match b {
            b'{' => {
                flush(token_start.take(), i, &mut tokens);
                comment_open = Some(i);
            }
            b'}' => {
                return Err(IngestError::MalformedMovetext {
                    position: i,
                    reason: "unmatched '}'".into(),
                });
            }
            b'(' => {
                flush(token_start.take(), i, &mut tokens);
                paren_depth += 1;
                last_open_paren = i;
            }
            b')' => {
                token_start = None;
                if paren_depth == 0 {
                    return Err(IngestError::MalformedMovetext {
                        position: i,
                        reason: "unmatched ')'".into(),
                    });
                }
                paren_depth -= 1;
            }
            _ if paren_depth > 0 => {}
            b' ' | b'\t' | b'\r' | b'\n' => {
                flush(token_start.take(), i, &mut tokens);
            }
            _ => {
                if token_start.is_none() {
                    token_start = Some(i);
                }
            }
        }
    }

    if let Some(pos) = comment_open {
        return Err(IngestError::MalformedMovetext {
            position: pos,
            reason: "unterminated '{' comment".into(),
        });
    }
    if paren_depth > 0 {
        return Err(IngestError::MalformedMovetext {
            position: last_open_paren,
            reason: "unterminated '(' variation".into(),
        });
    }
    flush(token_start, bytes.len(), &mut tokens);
    Ok(tokens)
}

/// Classify one whitespace-delimited token and append the surviving move, if any.
fn push_token(raw: &str, tokens: &mut Vec<String>) {
    // Numeric Annotation Glyphs and any glyph-like debris.
    if raw.contains('$') {
        return;
    }
    // Annotation marks ("Nf3!?", "Qxe5??"); suffixes in well-formed PGN, but
    // stripped wherever they occur so output tokens never carry them.
    let marks_stripped: String = raw.chars().filter(|c| !matches!(c, '!' | '?')).collect();
    // Move numbers, possibly glued to the move itself ("12.e4", "12...Nf6").
    let mut s = marks_stripped.as_str();
    if s.starts_with(|c: char| c.is_ascii_digit()) {
        let digits = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
        if s[digits..].starts_with('.') {
            s = &s[digits..];
        }
    }
    let mut s = s.trim_start_matches('.');
    // Rare explicit en-passant suffix ("exd6e.p.").
    while let Some(stripped) = s.strip_suffix("e.p.") {
        s = stripped;
    }
    // Game results terminate the mainline; checked last so annotated forms
    // ("1-0!") cannot survive as tokens.
    if s.is_empty() || matches!(s, "1-0" | "0-1" | "1/2-1/2" | "*") {
        return;
    }
    tokens.push(s.to_string());
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cleans_annotated_lichess_movetext() {
        let movetext = "1. e4 { [%eval 0.2] } 1... e6 {[%eval 0.13] } 2. Bc4 { [%eval -0.31] } \
                        2... d5 {[%eval -0.28] } 3. exd5 {[%eval -0.37] } 3... exd5 { [%eval -0.31] } \
                        4. Bb3 { [%eval -0.33] } 4... Nf6 { [%eval -0.35] } 5. d4 {[%eval -0.34]} \
                        5... Be7 { [%eval 0.0] } 6. Nf3 { [%eval 0.0] } 6... O-O { [%eval -0.08] } \
                        7. Bg5 { [%eval -0.19] } 7... h6 { [%eval -0.29] } 8. Bxf6 {[%eval -0.36] } \
                        8... Bxf6 { [%eval -0.37] } 9. O-O { [%eval -0.36] } 9... c6 {[%eval -0.12] } \
                        10. Re1 { [%eval -0.17]} 10... Bf5 { [%eval -0.04] }...";
        let got = clean_movetext(movetext).unwrap();
        let want = "e4 e6 Bc4 d5 exd5 exd5 Bb3 Nf6 d4 Be7 Nf3 O-O Bg5 h6 Bxf6 Bxf6 O-O c6 Re1 Bf5";
        assert_eq!(got.join(" "), want);
    }

    #[test]
    fn strips_annotations_variations_and_result() {
        let got = clean_movetext("1. e4 e5 2. Nf3! Nc6 (2... d6) 1-0").unwrap();
        assert_eq!(got, vec!["e4", "e5", "Nf3", "Nc6"]);
    }

    #[test]
    fn empty_movetext_yields_no_tokens() {
        assert_eq!(clean_movetext("").unwrap(), Vec::<String>::new());
    }

    #[test]
    fn nested_variations_removed_to_arbitrary_depth() {
        let got = clean_movetext("1. d4 (1. e4 (1. c4 c5 (1... e5)) e5) d5 *").unwrap();
        assert_eq!(got, vec!["d4", "d5"]);
    }

    #[test]
    fn variation_may_contain_comments_with_parens() {
        let got = clean_movetext("1. e4 (1. d4 { better :) } d5) c5 0-1").unwrap();
        assert_eq!(got, vec!["e4", "c5"]);
    }

    #[test]
    fn glued_move_numbers_and_nags() {
        let got = clean_movetext("1.e4 c5 2...Nf6 $14 3. d4!?").unwrap();
        assert_eq!(got, vec!["e4", "c5", "Nf6", "d4"]);
    }

    #[test]
    fn en_passant_suffix_stripped() {
        let got = clean_movetext("1. e5 f5 2. exf6e.p. *").unwrap();
        assert_eq!(got, vec!["e5", "f5", "exf6"]);
    }

    #[test]
    fn unbalanced_brace_reports_position() {
        match clean_movetext("1. e4 { [%eval 0.2] e5") {
            Err(IngestError::MalformedMovetext { position, .. }) => assert_eq!(position, 6),
            other => panic!("expected MalformedMovetext, got {other:?}"),
        }
    }

    #[test]
    fn unbalanced_parens_report_position() {
        match clean_movetext("1. e4 e5 ) d4") {
            Err(IngestError::MalformedMovetext { position, .. }) => assert_eq!(position, 9),
            other => panic!("expected MalformedMovetext, got {other:?}"),
        }
        assert!(clean_movetext("1. e4 (1... e5").is_err());
    }

    #[test]
    fn castling_kept_verbatim() {
        let got = clean_movetext("10. O-O O-O-O 11. Kb1 1/2-1/2").unwrap();
        assert_eq!(got, vec!["O-O", "O-O-O", "Kb1"]);
    }

    proptest! {
        /// Cleaning its own joined output changes nothing.
        #[test]
        fn cleaning_is_idempotent(input in "[ -~\\n]{0,200}") {
            if let Ok(once) = clean_movetext(&input) {
                let again = clean_movetext(&once.join(" ")).unwrap();
                prop_assert_eq!(once, again);
            }
        }

        /// Output tokens never contain annotation or grouping characters,
        /// whitespace, or a leading move-number shape.
        #[test]
        fn no_forbidden_substrings(input in "[ -~\\n]{0,200}") {
            if let Ok(tokens) = clean_movetext(&input) {
                for t in &tokens {
                    prop_assert!(!t.contains(['{', '}', '(', ')', '$', '!', '?']), "bad token {t:?}");
                    prop_assert!(!t.contains(char::is_whitespace), "whitespace in {t:?}");
                    let digits = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
                    let move_number_shaped = digits > 0 && t[digits..].starts_with('.');
                    prop_assert!(!move_number_shaped, "move-number shaped token {t:?}");
                }
            }
        }
    }
}
