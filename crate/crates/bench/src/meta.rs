//! `key=value` files: run metadata sidecars and `--config` inputs share
//! this format, so a sidecar can be replayed as a config.

use std::fmt::Write as _;

/// Ordered `key=value` lines plus `#` comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    lines: Vec<String>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.lines.push(format!("{key}={value}"));
        self
    }

    pub fn comment(&mut self, text: impl std::fmt::Display) -> &mut Self {
        self.lines.push(format!("# {text}"));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            writeln!(out, "{l}").unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

/// Parses `key=value` lines, skipping blanks and `#` comments.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, ParseError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ParseError { line: i + 1, reason: format!("expected key=value, found {line:?}") })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ParseError { line: i + 1, reason: "empty key".into() });
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}
