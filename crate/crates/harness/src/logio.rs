//! Newline-delimited JSON click logs.
//!
//! A non-empty log starts with a schema line, `{"schema":"fairpairs.clicklog.v1"}`,
//! followed by one record object per line. An empty log is an empty file.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use fairpairs_core::ClickLogRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA: &str = "fairpairs.clicklog.v1";

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unsupported log schema {found:?} (expected {SCHEMA:?})")]
    Version { line: usize, found: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema: String,
}

pub fn write_log_to<W: Write>(mut out: W, records: &[ClickLogRecord]) -> Result<(), LogError> {
    if records.is_empty() {
        return Ok(());
    }
    serde_json::to_writer(&mut out, &Header { schema: SCHEMA.into() }).map_err(io::Error::from)?;
    out.write_all(b"\n")?;
    for rec in records {
        serde_json::to_writer(&mut out, rec).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_log(path: &Path, records: &[ClickLogRecord]) -> Result<(), LogError> {
    write_log_to(BufWriter::new(File::create(path)?), records)
}

/// Parses a log, validating each record against its flip plan.
pub fn read_log_from<R: BufRead>(input: R) -> Result<Vec<ClickLogRecord>, LogError> {
    let mut records = Vec::new();
    let mut seen_header = false;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            let header: Header = serde_json::from_str(&line).map_err(|e| LogError::Parse {
                line: line_no,
                message: format!("expected a schema header: {e}"),
            })?;
            if header.schema != SCHEMA {
                return Err(LogError::Version { line: line_no, found: header.schema });
            }
            seen_header = true;
            continue;
        }
        let rec: ClickLogRecord =
            serde_json::from_str(&line).map_err(|e| LogError::Parse { line: line_no, message: e.to_string() })?;
        rec.validate().map_err(|e| LogError::Parse { line: line_no, message: e.to_string() })?;
        records.push(rec);
    }
    Ok(records)
}

pub fn read_log(path: &Path) -> Result<Vec<ClickLogRecord>, LogError> {
    read_log_from(BufReader::new(File::open(path)?))
}
