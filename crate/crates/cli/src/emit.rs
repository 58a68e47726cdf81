//! File emission with fixed float formatting and post-write schema checks.
//!
//! CSV floats carry 17 significant digits so identical configs produce
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("schema self-check failed for {path}: {reason}")]
    SchemaCheck { path: String, reason: String },
}

fn io_err(path: &Path, source: std::io::Error) -> EmitError {
    EmitError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// 17 significant digits; bit-exact round trip.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Optional cell: absent values are empty fields.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Write a CSV file, then re-read and verify it: every row carries the
/// header's column count, and `time_column` (when given) is strictly
/// increasing.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
    time_column: Option<usize>,
) -> Result<(), EmitError> {
    let mut out = Vec::new();
    writeln!(out, "{}", header.join(",")).expect("vec write");
    for row in rows {
        writeln!(out, "{}", row.join(",")).expect("vec write");
    }
    fs::write(path, out).map_err(|e| io_err(path, e))?;
    verify_csv(path, header.len(), time_column)
}

fn verify_csv(path: &Path, columns: usize, time_column: Option<usize>) -> Result<(), EmitError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let check = |reason: String| EmitError::SchemaCheck {
        path: path.display().to_string(),
        reason,
    };
    let mut previous_time = f64::NEG_INFINITY;
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(check(format!(
                "line {} has {} fields, expected {columns}",
                i + 1,
                fields.len()
            )));
        }
        if i == 0 {
            continue;
        }
        if let Some(col) = time_column {
            let t: f64 = fields[col]
                .parse()
                .map_err(|_| check(format!("line {}: unparsable time {:?}", i + 1, fields[col])))?;
            if t <= previous_time {
                return Err(check(format!(
                    "time not strictly increasing at line {} ({t} after {previous_time})",
                    i + 1
                )));
            }
            previous_time = t;
        }
    }
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), EmitError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable summary");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}
