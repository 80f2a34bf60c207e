//! Streaming game segmentation over plain or zstd-framed PGN archives.
//!
//! The reader holds one game in memory at a time, so peak memory is bounded
//! by the largest single game plus the decompression window regardless of
//! archive size.

use std::io::{self, BufRead, BufReader, Read};

use super::{IngestError, RawGame};

const ZSTD_MAGIC: [u8; 4] = [0x28, 0xb5, 0x2f, 0xfd];

/// How the input byte stream is framed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Compression {
    /// Sniff the stream's magic bytes.
    #[default]
    Auto,
    Zstd,
    None,
}

impl std::str::FromStr for Compression {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Compression::Auto),
            "zstd" | "zst" => Ok(Compression::Zstd),
            "none" | "plain" => Ok(Compression::None),
            other => Err(format!("unknown compression {other:?}")),
        }
    }
}

/// Lazily yield [`RawGame`]s from a PGN byte stream.
pub fn stream_games<R: Read + 'static>(
    input: R,
    compression: Compression,
) -> Result<GameStream, IngestError> {
    let counted = CountingReader::new(input);
    let mut buffered = BufReader::with_capacity(1 << 16, counted);
    let compression = match compression {
        Compression::Auto => {
            let head = buffered.fill_buf().map_err(|e| IngestError::Stream {
                offset: 0,
                source: e,
            })?;
            if head.starts_with(&ZSTD_MAGIC) {
                Compression::Zstd
            } else {
                Compression::None
            }
        }
        other => other,
    };
    let lines: Box<dyn BufRead> = match compression {
        Compression::Zstd => {
            let decoder = zstd::Decoder::new(buffered).map_err(|e| IngestError::Stream {
                offset: 0,
                source: e,
            })?;
            Box::new(BufReader::with_capacity(1 << 16, decoder))
        }
        _ => Box::new(buffered),
    };
    Ok(GameStream {
        lines,
        state: State::BetweenGames,
        pending: None,
        consumed: 0,
        done: false,
    })
}

/// Iterator over the games of one archive, in file order.
pub struct GameStream {
    lines: Box<dyn BufRead>,
    state: State,
    pending: Option<RawGame>,
    /// Compressed bytes consumed, for error reporting.
    consumed: u64,
    done: bool,
}

enum State {
    BetweenGames,
    InHeaders,
    InMovetext { saw_blank: bool },
}

impl GameStream {
    fn read_line(&mut self, buf: &mut String) -> Result<usize, IngestError> {
        buf.clear();
        self.lines.read_line(buf).map_err(|e| IngestError::Stream {
            offset: self.consumed,
            source: e,
        })
    }

    fn next_game(&mut self) -> Result<Option<RawGame>, IngestError> {
        if self.done {
            return Ok(None);
        }
        let mut line = String::new();
        loop {
            let n = self.read_line(&mut line)?;
            if n == 0 {
                self.done = true;
                return Ok(self.pending.take());
            }
            self.consumed += n as u64;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            let blank = trimmed.trim().is_empty();
            match &mut self.state {
                State::BetweenGames => {
                    if blank {
                        continue;
                    }
                    if let Some((key, value)) = parse_header_line(trimmed) {
                        self.pending = Some(RawGame::default());
                        self.pending.as_mut().unwrap().headers.push((key, value));
                        self.state = State::InHeaders;
                    } else {
                        // Headerless movetext; still a game.
                        let mut game = RawGame::default();
                        game.movetext.push_str(trimmed);
                        game.movetext.push('\n');
                        self.pending = Some(game);
                        self.state = State::InMovetext { saw_blank: false };
                    }
                }
                State::InHeaders => {
                    if blank {
                        self.state = State::InMovetext { saw_blank: false };
                    } else if let Some((key, value)) = parse_header_line(trimmed) {
                        self.pending.as_mut().unwrap().headers.push((key, value));
                    } else {
                        self.state = State::InMovetext { saw_blank: false };
                        let game = self.pending.as_mut().unwrap();
                        game.movetext.push_str(trimmed);
                        game.movetext.push('\n');
                    }
                }
                State::InMovetext { saw_blank } => {
                    if blank {
                        *saw_blank = true;
                        continue;
                    }
                    let game = self.pending.as_mut().unwrap();
                    // A strict header tag line starts the next game. Movetext
                    // never produces one: '[' only occurs inside `{...}`
                    // comments, and those never open a line in tag syntax.
                    if let Some((key, value)) = parse_header_line(trimmed) {
                        if *saw_blank || game.movetext.is_empty() {
                            let mut next = RawGame::default();
                            next.headers.push((key, value));
                            let finished = self.pending.replace(next);
                            self.state = State::InHeaders;
                            return Ok(finished);
                        }
                    }
                    game.movetext.push_str(trimmed);
                    game.movetext.push('\n');
                }
            }
        }
    }
}

impl Iterator for GameStream {
    type Item = Result<RawGame, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.next_game() {
            Ok(Some(mut game)) => {
                // Trim the trailing newline the line accumulator adds.
                while game.movetext.ends_with('\n') {
                    game.movetext.pop();
                }
                Some(Ok(game))
            }
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Parse `[Key "value"]`; returns `None` for anything that is not a strict
/// single-line header tag.
fn parse_header_line(line: &str) -> Option<(String, String)> {
    let rest = line.strip_prefix('[')?;
    let rest = rest.strip_suffix(']')?;
    let space = rest.find(' ')?;
    let (key, value) = rest.split_at(space);
    if key.is_empty() || !key.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
        return None;
    }
    let value = value.trim_start();
    let value = value.strip_prefix('"')?.strip_suffix('"')?;
    Some((key.to_string(), value.replace("\\\"", "\"").replace("\\\\", "\\")))
}

/// Wraps a reader and tracks how many raw bytes were consumed so stream
/// errors can report a byte offset into the source archive.
struct CountingReader<R> {
    inner: R,
    count: u64,
}

impl<R: Read> CountingReader<R> {
    fn new(inner: R) -> Self {
        CountingReader { inner, count: 0 }
    }
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf).map_err(|e| {
            io::Error::new(e.kind(), format!("at compressed byte {}: {e}", self.count))
        })?;
        self.count += n as u64;
        Ok(n)
    }
}
