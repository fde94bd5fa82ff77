use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{Snapshot, SCHEMA_NAME, SCHEMA_VERSION};
use crate::error::{Error, Result};

/// First line of every stream file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub schema: String,
    pub schema_version: String,
}

impl StreamHeader {
    pub fn current() -> Self {
        Self {
            schema: SCHEMA_NAME.to_string(),
            schema_version: SCHEMA_VERSION.to_string(),
        }
    }

    pub(crate) fn check(line: &str) -> std::result::Result<(), String> {
        let h: StreamHeader =
            serde_json::from_str(line).map_err(|e| format!("unreadable header: {e}"))?;
        if h.schema != SCHEMA_NAME {
            return Err(format!("schema '{}' is not '{SCHEMA_NAME}'", h.schema));
        }
        if h.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "schema version '{}' does not match supported '{SCHEMA_VERSION}'",
                h.schema_version
            ));
        }
        Ok(())
    }
}

/// Writes a header line and one JSON object per snapshot.
pub fn write_stream(snapshots: &[Snapshot], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    serde_json::to_writer(&mut w, &StreamHeader::current())?;
    w.write_all(b"\n").map_err(io)?;
    for s in snapshots {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn read_impl(path: &Path, strict: bool) -> Result<(Vec<Snapshot>, Vec<(usize, String)>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => {
            return Err(Error::Schema {
                line: 1,
                message: "empty stream: missing header".into(),
            })
        }
    };
    StreamHeader::check(&header).map_err(|message| Error::Schema { line: 1, message })?;
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Snapshot>(&line) {
            Ok(s) => out.push(s),
            Err(e) if strict => {
                return Err(Error::Schema {
                    line: line_no,
                    message: e.to_string(),
                })
            }
            Err(e) => {
                warn!("{}: skipping line {line_no}: {e}", path.display());
                skipped.push((line_no, e.to_string()));
            }
        }
    }
    Ok((out, skipped))
}

/// Reads every snapshot; the first malformed line aborts with its line number.
pub fn read_stream(path: &Path) -> Result<Vec<Snapshot>> {
    read_impl(path, true).map(|(s, _)| s)
}

/// Reads every well-formed snapshot and returns `(line, message)` for each skipped line.
pub fn read_stream_lenient(path: &Path) -> Result<(Vec<Snapshot>, Vec<(usize, String)>)> {
    read_impl(path, false)
}
