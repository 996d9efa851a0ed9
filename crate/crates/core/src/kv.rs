//! Flat `key=value` text used for configs and reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KvError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("key `{key}`: cannot parse {value:?}: {msg}")]
    Value {
        key: String,
        value: String,
        msg: String,
    },
}

/// Parse `key=value` lines. Blank lines and lines starting with `#` are
/// skipped; keys may not repeat.
pub fn parse(text: &str) -> Result<BTreeMap<String, String>, KvError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |msg: String| KvError::Syntax { line: i + 1, msg };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected key=value, found {line:?}")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(syntax("empty key".into()));
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(syntax(format!("duplicate key `{k}`")));
        }
    }
    Ok(out)
}

/// Render pairs in the given order, one per line.
pub fn format<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{}={}", k.as_ref(), v.as_ref());
    }
    s
}

/// Typed lookup.
pub fn get<T>(map: &BTreeMap<String, String>, key: &str) -> Result<T, KvError>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    let value = map
        .get(key)
        .ok_or_else(|| KvError::Missing(key.to_string()))?;
    value.parse().map_err(|e: T::Err| KvError::Value {
        key: key.to_string(),
        value: value.clone(),
        msg: e.to_string(),
    })
}
