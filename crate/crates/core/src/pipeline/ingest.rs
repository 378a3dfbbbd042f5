use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LOG_HEADER: [&str; 4] = ["stream_id", "timestamp", "kind", "utc_offset_min"];

/// Largest accepted share of malformed rows.
const MAX_REJECT_FRACTION: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Post,
    Mention,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Post => "post",
            EventKind::Mention => "mention",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventRecord {
    pub stream_id: String,
    /// Seconds since the Unix epoch (UTC).
    pub timestamp: i64,
    pub kind: EventKind,
    pub utc_offset_min: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    /// Sorted by stream, timestamp, kind.
    pub records: Vec<EventRecord>,
    pub rejects: Vec<Reject>,
    /// Data rows read, rejects included.
    pub rows: usize,
}

impl EventLog {
    pub fn stream_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.records.iter().map(|r| r.stream_id.as_str()).collect();
        ids.dedup();
        ids
    }
}

pub fn ingest(path: &Path) -> Result<EventLog> {
    let file = File::open(path).map_err(|e| Error::Ingest { path: path.to_path_buf(), message: e.to_string() })?;
    ingest_reader(file, path)
}

fn parse_row(fields: &csv::StringRecord) -> std::result::Result<EventRecord, String> {
    if fields.len() != LOG_HEADER.len() {
        return Err(format!("expected {} fields, found {}", LOG_HEADER.len(), fields.len()));
    }
    let stream_id = fields[0].trim();
    if stream_id.is_empty() {
        return Err("empty stream_id".into());
    }
    let timestamp: i64 =
        fields[1].trim().parse().map_err(|_| format!("timestamp '{}' is not an integer", &fields[1]))?;
    if timestamp < 0 {
        return Err(format!("negative timestamp {timestamp}"));
    }
    let kind = match fields[2].trim() {
        "post" => EventKind::Post,
        "mention" => EventKind::Mention,
        other => return Err(format!("unknown kind '{other}'")),
    };
    let utc_offset_min: i32 =
        fields[3].trim().parse().map_err(|_| format!("utc offset '{}' is not an integer", &fields[3]))?;
    if utc_offset_min.abs() >= 24 * 60 {
        return Err(format!("utc offset {utc_offset_min} min is more than a day"));
    }
    Ok(EventRecord { stream_id: stream_id.to_string(), timestamp, kind, utc_offset_min })
}

/// Parses a log, collecting malformed rows with their line numbers.
pub fn ingest_reader<R: Read>(reader: R, label: &Path) -> Result<EventLog> {
    let fail = |message: String| Error::Ingest { path: label.to_path_buf(), message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h?,
        None => return Err(fail("missing header".into())),
    };
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != LOG_HEADER {
        return Err(fail(format!("missing header: expected '{}', found '{}'", LOG_HEADER.join(","), names.join(","))));
    }
    let mut log = EventLog::default();
    let mut offsets: BTreeMap<String, i32> = BTreeMap::new();
    for row in rows {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                log.rows += 1;
                log.rejects.push(Reject { line, reason: e.to_string() });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        log.rows += 1;
        match parse_row(&row) {
            Ok(rec) => {
                let first = *offsets.entry(rec.stream_id.clone()).or_insert(rec.utc_offset_min);
                if first != rec.utc_offset_min {
                    log.rejects.push(Reject {
                        line,
                        reason: format!(
                            "utc offset {} differs from {first} earlier in stream '{}'",
                            rec.utc_offset_min, rec.stream_id
                        ),
                    });
                } else {
                    log.records.push(rec);
                }
            }
            Err(reason) => log.rejects.push(Reject { line, reason }),
        }
    }
    if log.rows > 0 && log.rejects.len() as f64 > MAX_REJECT_FRACTION * log.rows as f64 {
        return Err(fail(format!(
            "{} of {} rows malformed (more than {}%); first at line {}: {}",
            log.rejects.len(),
            log.rows,
            MAX_REJECT_FRACTION * 100.0,
            log.rejects[0].line,
            log.rejects[0].reason
        )));
    }
    log.records.sort();
    Ok(log)
}
