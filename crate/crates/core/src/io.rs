//! Series, profile, trace and label files plus the run manifest.
//!
//! Input series are either one value per line or a single-column CSV with an
//! optional header line. Every real number is written in scientific notation
//! with 17 significant digits, which round-trips `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::profile::MatrixProfile;
use crate::series::TimeSeries;
use crate::synthesis::{CheckpointRecord, SynthesisConfig, TrainingTrace};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[inline]
fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Non-empty lines with surrounding whitespace and quotes removed, each with
/// its 1-based line number.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(no, line)| {
        let trimmed = line.trim().trim_matches('"').trim();
        (!trimmed.is_empty()).then_some((no + 1, trimmed))
    })
}

/// Parses a single column of numbers, allowing a non-numeric first line.
pub fn parse_column<T, F>(text: &str, what: &str, parse: F) -> Result<Vec<T>>
where
    F: Fn(&str) -> Option<T>,
{
    let mut out = Vec::new();
    for (pos, (line_no, field)) in data_lines(text).enumerate() {
        if field.contains(',') {
            return Err(Error::invalid(format!(
                "{what}: line {line_no} has more than one column"
            )));
        }
        match parse(field) {
            Some(v) => out.push(v),
            None if pos == 0 => continue,
            None => {
                return Err(Error::invalid(format!(
                    "{what}: cannot parse {field:?} on line {line_no}"
                )))
            }
        }
    }
    Ok(out)
}

pub fn parse_series(text: &str) -> Result<TimeSeries> {
    let values = parse_column(text, "series", |s| s.parse::<f64>().ok())?;
    TimeSeries::new(values)
}

pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read series file {}: {e}", path.display())))?;
    parse_series(&text).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn format_series(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 26 + 6);
    s.push_str("value\n");
    for v in values {
        s.push_str(&real(*v));
        s.push('\n');
    }
    s
}

pub fn write_series(path: &Path, values: &[f64]) -> Result<()> {
    fs::write(path, format_series(values))?;
    Ok(())
}

/// Labels as `0`/`1` or `true`/`false`, one per line.
pub fn parse_labels(text: &str) -> Result<Vec<bool>> {
    parse_column(text, "labels", |s| match s.to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    })
}

pub fn read_labels(path: &Path) -> Result<Vec<bool>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read labels file {}: {e}", path.display())))?;
    parse_labels(&text)
}

pub fn format_profile(mp: &MatrixProfile) -> String {
    let mut s = String::from("distance,index\n");
    for (d, i) in mp.distances.iter().zip(&mp.indices) {
        let _ = writeln!(s, "{},{i}", real(*d));
    }
    s
}

pub fn write_profile(path: &Path, mp: &MatrixProfile) -> Result<()> {
    fs::write(path, format_profile(mp))?;
    Ok(())
}

/// Reads back the `(distance, index)` rows of a profile file.
pub fn parse_profile_rows(text: &str) -> Result<Vec<(f64, usize)>> {
    let mut rows = Vec::new();
    for (line_no, line) in data_lines(text).skip(1) {
        let mut parts = line.split(',');
        let row = match (parts.next(), parts.next(), parts.next()) {
            (Some(d), Some(i), None) => d.trim().parse().ok().zip(i.trim().parse().ok()),
            _ => None,
        };
        rows.push(
            row.ok_or_else(|| Error::invalid(format!("profile: malformed row on line {line_no}")))?,
        );
    }
    Ok(rows)
}

const TRACE_HEADER: &str = "iteration,total,local,distance,identity,median_abs_corr,mp_rmse";

pub fn format_trace(trace: &TrainingTrace) -> String {
    let mut s = format!("{TRACE_HEADER}\n");
    for r in &trace.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.iteration,
            real(r.total),
            real(r.local),
            real(r.distance),
            real(r.identity),
            real(r.median_abs_corr),
            real(r.mp_rmse)
        );
    }
    s
}

pub fn write_trace(path: &Path, trace: &TrainingTrace) -> Result<()> {
    fs::write(path, format_trace(trace))?;
    Ok(())
}

pub fn parse_trace(text: &str) -> Result<TrainingTrace> {
    let mut records = Vec::new();
    for (line_no, line) in data_lines(text).skip(1) {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::invalid(format!("trace: malformed row on line {line_no}"));
        if fields.len() != 7 {
            return Err(bad());
        }
        let num = |k: usize| fields[k].parse::<f64>().map_err(|_| bad());
        records.push(CheckpointRecord {
            iteration: fields[0].parse().map_err(|_| bad())?,
            total: num(1)?,
            local: num(2)?,
            distance: num(3)?,
            identity: num(4)?,
            median_abs_corr: num(5)?,
            mp_rmse: num(6)?,
        });
    }
    Ok(TrainingTrace { records })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything needed to repeat a synthesis run bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub input_path: String,
    pub input_sha256: String,
    pub seed: u64,
    pub config: SynthesisConfig,
    pub started_unix: u64,
    pub finished_unix: u64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
