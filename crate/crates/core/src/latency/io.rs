//! Latency sample exchange format.
//!
//! Either the four-column transaction log written by the simulator
//! (`submit_time,commit_time,key,verdict`) or a single column of latency
//! values, with or without a header line. Times are written in shortest
//! round-trip form so a re-read yields bit-identical values.

use super::{TxRecord, Verdict};
use crate::error::{Error, Result};
use std::io::{Read, Write};

pub const RECORD_HEADER: [&str; 4] = ["submit_time", "commit_time", "key", "verdict"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyRow {
    pub submit_time: f64,
    pub commit_time: f64,
    pub key: u32,
    pub verdict: Verdict,
}

impl From<&TxRecord> for LatencyRow {
    fn from(r: &TxRecord) -> Self {
        Self {
            submit_time: r.submit_time,
            commit_time: r.commit_time,
            key: r.key,
            verdict: r.verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LatencyFile {
    Records(Vec<LatencyRow>),
    Values(Vec<f64>),
}

impl LatencyFile {
    /// Latencies usable for fitting: every value of a single-column file, or
    /// commit − submit of the valid rows on `key`.
    pub fn latencies(&self, key: u32) -> Vec<f64> {
        match self {
            LatencyFile::Values(v) => v.clone(),
            LatencyFile::Records(rows) => rows
                .iter()
                .filter(|r| r.key == key && r.verdict == Verdict::Valid)
                .map(|r| r.commit_time - r.submit_time)
                .collect(),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse(format!("line {line}: {e}"))
}

pub fn write_records<W: Write>(records: &[TxRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.submit_time.to_string(),
            r.commit_time.to_string(),
            r.key.to_string(),
            r.verdict.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_values<W: Write>(values: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["latency"]).map_err(csv_err)?;
    for v in values {
        w.write_record([v.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

fn parse_f64(field: &str, line: u64, name: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: {name} is not a number: {field:?}")))
}

/// Reads either file layout; see the module docs.
pub fn read_latency_file<R: Read>(input: R) -> Result<LatencyFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = reader.records();
    let first = match rows.next() {
        Some(r) => r.map_err(csv_err)?,
        None => return Ok(LatencyFile::Values(Vec::new())),
    };
    let first_line = first.position().map(|p| p.line()).unwrap_or(1);

    match first.len() {
        1 => {
            let mut values = Vec::new();
            let header = first[0].parse::<f64>().is_err();
            if !header {
                values.push(check_positive(
                    parse_f64(&first[0], first_line, "latency")?,
                    first_line,
                )?);
            }
            for rec in rows {
                let rec = rec.map_err(csv_err)?;
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                if rec.len() != 1 {
                    return Err(Error::Parse(format!(
                        "line {line}: expected 1 column, found {}",
                        rec.len()
                    )));
                }
                values.push(check_positive(parse_f64(&rec[0], line, "latency")?, line)?);
            }
            Ok(LatencyFile::Values(values))
        }
        4 => {
            if first.iter().ne(RECORD_HEADER.iter().copied()) {
                return Err(Error::Parse(format!(
                    "line {first_line}: expected header {}",
                    RECORD_HEADER.join(",")
                )));
            }
            let mut out = Vec::new();
            for rec in rows {
                let rec = rec.map_err(csv_err)?;
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                if rec.len() != 4 {
                    return Err(Error::Parse(format!(
                        "line {line}: expected 4 columns, found {}",
                        rec.len()
                    )));
                }
                let submit_time = parse_f64(&rec[0], line, "submit_time")?;
                let commit_time = parse_f64(&rec[1], line, "commit_time")?;
                let key = rec[2].parse::<u32>().map_err(|_| {
                    Error::Parse(format!("line {line}: key is not an integer: {:?}", &rec[2]))
                })?;
                let verdict = rec[3]
                    .parse::<Verdict>()
                    .map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
                if !(submit_time >= 0.0) || !(commit_time > submit_time) {
                    return Err(Error::Parse(format!(
                        "line {line}: commit_time must exceed a nonnegative submit_time"
                    )));
                }
                out.push(LatencyRow {
                    submit_time,
                    commit_time,
                    key,
                    verdict,
                });
            }
            Ok(LatencyFile::Records(out))
        }
        n => Err(Error::Parse(format!(
            "line {first_line}: expected 1 or 4 columns, found {n}"
        ))),
    }
}

fn check_positive(v: f64, line: u64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse(format!(
            "line {line}: latency must be positive, got {v}"
        )))
    }
}
