//! CSV files of aggregated experiment records.

use std::io::{Read, Write};

use rtdp_core::{AggregateRecord, AggregateRow};

pub const HEADER: [&str; 6] = ["checkpoint_reward", "mean_timesteps", "se_timesteps", "mean_backups", "se_backups", "n_trials"];

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("{path}: line {line}, column {column}: cannot parse {value:?}")]
    Value { path: String, line: u64, column: &'static str, value: String },
}

/// `x` with six significant digits in the style of C's `%g`.
pub fn format_g(x: f64) -> String {
    const DIGITS: i32 = 6;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_record<W: Write>(record: &AggregateRecord, out: W) -> Result<(), RecordError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in &record.rows {
        w.write_record([
            format_g(r.checkpoint_reward),
            format_g(r.mean_timesteps),
            format_g(r.se_timesteps),
            format_g(r.mean_backups),
            format_g(r.se_backups),
            r.n_trials.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn record_to_string(record: &AggregateRecord) -> String {
    let mut buf = Vec::new();
    write_record(record, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Reads rows written by `write_record`. `source` names the input in errors.
/// Repetition and truncation counts are not stored and come back as zero.
pub fn read_rows<R: Read>(input: R, source: &str) -> Result<Vec<AggregateRow>, RecordError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    for (i, expected) in HEADER.iter().enumerate() {
        match headers.get(i) {
            Some(h) if h == *expected => {}
            found => {
                return Err(RecordError::Schema {
                    path: source.into(),
                    reason: format!("column {} should be {expected:?}, found {:?}", i + 1, found.unwrap_or("")),
                })
            }
        }
    }
    if headers.len() != HEADER.len() {
        return Err(RecordError::Schema { path: source.into(), reason: format!("expected {} columns, found {}", HEADER.len(), headers.len()) });
    }
    let mut rows = Vec::new();
    for result in r.records() {
        let rec = result?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, RecordError> {
            rec[i].parse().map_err(|_| RecordError::Value { path: source.into(), line, column: HEADER[i], value: rec[i].into() })
        };
        rows.push(AggregateRow {
            checkpoint_reward: num(0)?,
            mean_timesteps: num(1)?,
            se_timesteps: num(2)?,
            mean_backups: num(3)?,
            se_backups: num(4)?,
            n_trials: rec[5].parse().map_err(|_| RecordError::Value { path: source.into(), line, column: HEADER[5], value: rec[5].into() })?,
        });
    }
    Ok(rows)
}
