//! Plain-text `key = value` configuration files. One entry per line; `#`
//! starts a comment; blank lines are ignored.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("key {key:?}: invalid value {value:?}")]
    BadValue { key: String, value: String },
}

/// Parses the file body into an ordered key/value map.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Malformed { line: idx + 1, text: raw.to_string() })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Malformed { line: idx + 1, text: raw.to_string() });
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey { line: idx + 1, key });
        }
    }
    Ok(map)
}

pub fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::BadValue { key: key.to_string(), value: value.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let map = parse_kv("# header\n\na = 1\nb = two # trailing\n").unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map["a"], "1");
        assert_eq!(map["b"], "two");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(parse_kv("oops"), Err(ConfigError::Malformed { line: 1, .. })));
        assert!(matches!(parse_kv("a = 1\na = 2"), Err(ConfigError::DuplicateKey { line: 2, .. })));
    }
}
