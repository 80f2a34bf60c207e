//! Rating extraction and skill-level binning.

use super::{IngestError, RatingLevel, RawGame};

/// Rating header aliases, in lookup-preference order. Lichess database
/// exports write `WhiteElo`/`BlackElo`; some descriptions of the format use
/// `WhiteRating`/`BlackRating`. A `?` value counts as missing.
const WHITE_HEADERS: [&str; 2] = ["WhiteElo", "WhiteRating"];
const BLACK_HEADERS: [&str; 2] = ["BlackElo", "BlackRating"];

/// Arithmetic mean of the two players' ratings.
pub fn extract_avg_rating(game: &RawGame) -> Result<f64, IngestError> {
    let white = rating_header(game, &WHITE_HEADERS)?;
    let black = rating_header(game, &BLACK_HEADERS)?;
    Ok((white + black) / 2.0)
}

fn rating_header(game: &RawGame, aliases: &[&str]) -> Result<f64, IngestError> {
    for name in aliases {
        if let Some(value) = game.header(name) {
            let value = value.trim();
            if value.is_empty() || value == "?" {
                continue;
            }
            if let Ok(rating) = value.parse::<f64>() {
                return Ok(rating);
            }
        }
    }
    Err(IngestError::RatingMissing {
        header: aliases[0].to_string(),
    })
}

/// The six interior rating boundaries separating the seven levels.
///
/// With boundaries `[b1..b6]`, a rating `r` maps to `L1` when `r <= b1`, to
/// `L7` when `r >= b6`, and otherwise to the first level whose upper boundary
/// exceeds it, so interior boundary values land in the higher level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelBins {
    boundaries: [f64; 6],
}

impl Default for LevelBins {
    fn default() -> Self {
        LevelBins {
            boundaries: [1000.0, 1400.0, 1600.0, 1800.0, 2000.0, 2250.0],
        }
    }
}

impl LevelBins {
    pub fn new(boundaries: [f64; 6]) -> Result<Self, IngestError> {
        if boundaries.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(IngestError::InvalidBins(
                "boundaries must be finite and non-negative".into(),
            ));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IngestError::InvalidBins(
                "boundaries must be strictly ascending".into(),
            ));
        }
        Ok(LevelBins { boundaries })
    }

    /// Parse an override file: six ascending numbers separated by whitespace
    /// or newlines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let values: Vec<f64> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| IngestError::InvalidBins(format!("not a number: {tok:?}")))
            })
            .collect::<Result<_, _>>()?;
        let boundaries: [f64; 6] = values.try_into().map_err(|v: Vec<f64>| {
            IngestError::InvalidBins(format!("expected 6 boundaries, found {}", v.len()))
        })?;
        LevelBins::new(boundaries)
    }

    pub fn assign(&self, avg_rating: f64) -> Result<RatingLevel, IngestError> {
        if !avg_rating.is_finite() || avg_rating < 0.0 {
            return Err(IngestError::InvalidRating { value: avg_rating });
        }
        if avg_rating <= self.boundaries[0] {
            return Ok(RatingLevel::L1);
        }
        for (i, &bound) in self.boundaries.iter().enumerate().skip(1) {
            if avg_rating < bound {
                return Ok(RatingLevel::from_index(i).unwrap());
            }
        }
        Ok(RatingLevel::L7)
    }
}

/// Bin an average rating into its skill level using the default boundaries.
pub fn assign_level(avg_rating: f64) -> Result<RatingLevel, IngestError> {
    LevelBins::default().assign(avg_rating)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn game_with(headers: &[(&str, &str)]) -> RawGame {
        RawGame {
            headers: headers
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            movetext: String::new(),
        }
    }

    #[test]
    fn averages_both_ratings() {
        let g = game_with(&[("WhiteElo", "1600"), ("BlackElo", "1400")]);
        assert_eq!(extract_avg_rating(&g).unwrap(), 1500.0);
        let g = game_with(&[("WhiteElo", "1111"), ("BlackElo", "1112")]);
        assert_eq!(extract_avg_rating(&g).unwrap(), 1111.5);
    }

    #[test]
    fn accepts_rating_header_alias() {
        let g = game_with(&[("WhiteRating", "2000"), ("BlackRating", "2100")]);
        assert_eq!(extract_avg_rating(&g).unwrap(), 2050.0);
        // Elo headers win when both are present.
        let g = game_with(&[
            ("WhiteElo", "1000"),
            ("WhiteRating", "9999"),
            ("BlackElo", "1000"),
        ]);
        assert_eq!(extract_avg_rating(&g).unwrap(), 1000.0);
    }

    #[test]
    fn missing_black_rating_reports_header() {
        let g = game_with(&[("WhiteElo", "1500")]);
        match extract_avg_rating(&g) {
            Err(IngestError::RatingMissing { header }) => assert!(header.starts_with("Black")),
            other => panic!("expected RatingMissing, got {other:?}"),
        }
    }

    #[test]
    fn unknown_rating_marker_is_missing() {
        let g = game_with(&[("WhiteElo", "?"), ("BlackElo", "1500")]);
        assert!(matches!(
            extract_avg_rating(&g),
            Err(IngestError::RatingMissing { .. })
        ));
    }

    #[test]
    fn level_bins_match_published_boundaries() {
        for (rating, level) in [
            (900.0, RatingLevel::L1),
            (1000.0, RatingLevel::L1),
            (1000.5, RatingLevel::L2),
            (1399.0, RatingLevel::L2),
            (1400.0, RatingLevel::L3),
            (1500.0, RatingLevel::L3),
            (1600.0, RatingLevel::L4),
            (1800.0, RatingLevel::L5),
            (2000.0, RatingLevel::L6),
            (2249.0, RatingLevel::L6),
            (2250.0, RatingLevel::L7),
            (3200.0, RatingLevel::L7),
            (0.0, RatingLevel::L1),
        ] {
            assert_eq!(assign_level(rating).unwrap(), level, "rating {rating}");
        }
    }

    #[test]
    fn invalid_ratings_rejected() {
        assert!(matches!(
            assign_level(f64::NAN),
            Err(IngestError::InvalidRating { .. })
        ));
        assert!(matches!(
            assign_level(-1.0),
            Err(IngestError::InvalidRating { .. })
        ));
        assert!(matches!(
            assign_level(f64::INFINITY),
            Err(IngestError::InvalidRating { .. })
        ));
    }

    #[test]
    fn bins_overrides_parse_and_validate() {
        let bins = LevelBins::parse("800 1200\n1500 1700 # comment\n1900 2100\n").unwrap();
        assert_eq!(bins.assign(800.0).unwrap(), RatingLevel::L1);
        assert_eq!(bins.assign(1200.0).unwrap(), RatingLevel::L3);
        assert!(LevelBins::parse("1 2 3").is_err());
        assert!(LevelBins::parse("6 5 4 3 2 1").is_err());
        assert!(LevelBins::parse("1 2 3 4 5 x").is_err());
    }

    proptest! {
        /// Every finite non-negative rating maps to exactly one level, and
        /// the mapping is monotone in the rating.
        #[test]
        fn binning_is_total_and_monotone(a in 0.0f64..4000.0, b in 0.0f64..4000.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let level_lo = assign_level(lo).unwrap();
            let level_hi = assign_level(hi).unwrap();
            prop_assert!(level_lo <= level_hi);
        }
    }
}
