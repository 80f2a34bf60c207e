//! Key-value experiment configuration files.
//!
//! Format: one `key = value` pair per line, `#` comments, blank lines
//! ignored. Values keep everything after the first `=`, trimmed. CLI flags
//! override file values.

use std::collections::BTreeMap;
use std::str::FromStr;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    BadLine { line: usize, text: String },

    #[error("config key {key:?}: cannot parse {value:?} as {wanted}")]
    BadValue {
        key: String,
        value: String,
        wanted: &'static str,
    },
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<ConfigMap, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::BadLine {
                line: i + 1,
                text: raw.to_string(),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::BadLine {
                    line: i + 1,
                    text: raw.to_string(),
                });
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(ConfigMap { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Typed lookup; `None` when the key is absent.
    pub fn get<T: FromStr>(&self, key: &str, wanted: &'static str) -> Result<Option<T>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(value) => value.parse().map(Some).map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                value: value.clone(),
                wanted,
            }),
        }
    }

    /// Comma-separated list lookup.
    pub fn get_list<T: FromStr>(
        &self,
        key: &str,
        wanted: &'static str,
    ) -> Result<Option<Vec<T>>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(value) => value
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|_| ConfigError::BadValue {
                        key: key.to_string(),
                        value: value.clone(),
                        wanted,
                    })
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_blanks() {
        let cfg = ConfigMap::parse("# experiment\norder = 5\n\nks = 16,100 # prefixes\n").unwrap();
        assert_eq!(cfg.get::<usize>("order", "integer").unwrap(), Some(5));
        assert_eq!(
            cfg.get_list::<usize>("ks", "integer").unwrap(),
            Some(vec![16, 100])
        );
        assert_eq!(cfg.get::<usize>("absent", "integer").unwrap(), None);
    }

    #[test]
    fn rejects_malformed_lines_and_values() {
        assert!(matches!(
            ConfigMap::parse("just some words\n"),
            Err(ConfigError::BadLine { line: 1, .. })
        ));
        let cfg = ConfigMap::parse("order = five\n").unwrap();
        assert!(matches!(
            cfg.get::<usize>("order", "integer"),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn values_may_contain_equals_signs() {
        let cfg = ConfigMap::parse("note = a=b\n").unwrap();
        assert_eq!(cfg.raw("note"), Some("a=b"));
    }
}
