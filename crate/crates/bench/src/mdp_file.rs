//! Plain-text MDP files.
//!
//! ```text
//! mdp S A gamma
//! s a R(s,a) k s1 p1 ... sk pk
//! ```
//!
//! One line per pair in state-major order; blank and `#` lines are skipped
//! on input. Floats carry 17 significant
//! digits so a write/read cycle reproduces the MDP bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rtdp_core::{Mdp, MdpError};

#[derive(Debug, thiserror::Error)]
pub enum MdpFileError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid MDP: {0}")]
    Mdp(#[from] MdpError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_text(mdp: &Mdp) -> String {
    let mut out = format!("mdp {} {} {}\n", mdp.num_states(), mdp.num_actions(), float(mdp.discount()));
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            let row = mdp.successors(s, a);
            write!(out, "{s} {a} {} {}", float(mdp.reward(s, a)), row.len()).unwrap();
            for &(next, p) in row {
                write!(out, " {next} {}", float(p)).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

fn parse_err(line: usize, reason: impl Into<String>) -> MdpFileError {
    MdpFileError::Parse { line, reason: reason.into() }
}

fn field<T: std::str::FromStr>(tokens: &mut std::str::SplitWhitespace<'_>, line: usize, what: &str) -> Result<T, MdpFileError> {
    let tok = tokens.next().ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} {tok:?}")))
}

/// Parses an MDP. Rewards may exceed 1; the largest one becomes the bound.
pub fn from_text(text: &str) -> Result<Mdp, MdpFileError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| {
        let l = l.trim();
        !l.is_empty() && !l.starts_with('#')
    });
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("mdp") {
        return Err(parse_err(hline, "expected header `mdp S A gamma`"));
    }
    let ns: usize = field(&mut tokens, hline, "S")?;
    let na: usize = field(&mut tokens, hline, "A")?;
    let gamma: f64 = field(&mut tokens, hline, "gamma")?;
    if ns == 0 || na == 0 {
        return Err(parse_err(hline, "S and A must be positive"));
    }

    let mut rewards = vec![f64::NAN; ns * na];
    let mut rows: Vec<Option<Vec<(usize, f64)>>> = vec![None; ns * na];
    for (line, text) in lines {
        let mut tokens = text.split_whitespace();
        let s: usize = field(&mut tokens, line, "state")?;
        let a: usize = field(&mut tokens, line, "action")?;
        if s >= ns || a >= na {
            return Err(parse_err(line, format!("pair ({s}, {a}) out of range")));
        }
        let idx = s * na + a;
        if rows[idx].is_some() {
            return Err(parse_err(line, format!("pair ({s}, {a}) listed twice")));
        }
        rewards[idx] = field(&mut tokens, line, "reward")?;
        let k: usize = field(&mut tokens, line, "successor count")?;
        let mut row = Vec::with_capacity(k);
        for _ in 0..k {
            let next: usize = field(&mut tokens, line, "successor")?;
            let p: f64 = field(&mut tokens, line, "probability")?;
            row.push((next, p));
        }
        if tokens.next().is_some() {
            return Err(parse_err(line, "trailing fields"));
        }
        rows[idx] = Some(row);
    }
    if let Some(missing) = rows.iter().position(Option::is_none) {
        return Err(parse_err(0, format!("pair ({}, {}) missing", missing / na, missing % na)));
    }
    let bound = rewards.iter().copied().fold(1.0, f64::max);
    let rows = rows.into_iter().map(Option::unwrap).collect();
    Ok(Mdp::with_reward_bound(ns, na, gamma, rewards, rows, bound)?)
}

pub fn save(mdp: &Mdp, path: &Path) -> Result<(), MdpFileError> {
    fs::write(path, to_text(mdp)).map_err(|source| MdpFileError::Io { path: path.display().to_string(), source })
}

pub fn load(path: &Path) -> Result<Mdp, MdpFileError> {
    let text = fs::read_to_string(path).map_err(|source| MdpFileError::Io { path: path.display().to_string(), source })?;
    from_text(&text)
}
