//! Reading and writing snapshot logs.
//!
//! Two layouts are supported. JSONL holds one snapshot per line:
//!
//! ```text
//! {"ts":"2013-04-12T00:00:00Z","loc":"los_angeles","trends":[{"t":"#abc","r":1,"p":false}]}
//! ```
//!
//! CSV holds one trend entry per row with the header `ts,loc,rank,trend,promoted`;
//! the rows of one snapshot must be contiguous. CSV cannot express an empty
//! snapshot.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Catalog, ObservationLog, Timestamp, TrendEntry, TrendName, TrendSnapshot};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    Jsonl,
    Csv,
}

impl LogFormat {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => LogFormat::Csv,
            _ => LogFormat::Jsonl,
        }
    }
}

impl FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(LogFormat::Jsonl),
            "csv" => Ok(LogFormat::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown log format `{other}`"
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    t: String,
    r: i64,
    #[serde(default)]
    p: bool,
}

#[derive(Serialize, Deserialize)]
struct JsonSnapshot {
    ts: String,
    loc: String,
    trends: Vec<JsonEntry>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    ts: String,
    loc: String,
    rank: i64,
    trend: String,
    promoted: bool,
}

/// A snapshot as read from the file, before catalog and grid checks.
struct RawSnapshot {
    line: usize,
    ts: String,
    loc: String,
    entries: Vec<(String, i64, bool)>,
}

/// One problem found in an input file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub snapshots: usize,
    pub violations: Vec<Violation>,
    /// Set when the input holds no snapshot at all.
    pub note: Option<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.note.is_none()
    }
}

fn read_jsonl<R: Read>(
    reader: R,
    mut sink: impl FnMut(Result<RawSnapshot>) -> Result<()>,
) -> Result<()> {
    let reader = BufReader::new(reader);
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| Error::malformed(line_no, e.to_string()))?;
        if text.trim().is_empty() {
            continue;
        }
        let raw = serde_json::from_str::<JsonSnapshot>(&text)
            .map(|js| RawSnapshot {
                line: line_no,
                ts: js.ts,
                loc: js.loc,
                entries: js.trends.into_iter().map(|e| (e.t, e.r, e.p)).collect(),
            })
            .map_err(|e| Error::malformed(line_no, e.to_string()));
        sink(raw)?;
    }
    Ok(())
}

fn read_csv<R: Read>(
    reader: R,
    mut sink: impl FnMut(Result<RawSnapshot>) -> Result<()>,
) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::malformed(1, e.to_string()))?
        .clone();
    let mut current: Option<RawSnapshot> = None;
    for rec in rdr.records() {
        let parsed = rec.and_then(|r| {
            let line = r.position().map_or(0, |p| p.line() as usize);
            r.deserialize::<CsvRow>(Some(&headers))
                .map(|row| (line, row))
        });
        let (line, row) = match parsed {
            Ok(ok) => ok,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                sink(Err(Error::malformed(line, e.to_string())))?;
                continue;
            }
        };
        match current.as_mut() {
            Some(cur) if cur.ts == row.ts && cur.loc == row.loc => {
                cur.entries.push((row.trend, row.rank, row.promoted));
            }
            _ => {
                if let Some(done) = current.take() {
                    sink(Ok(done))?;
                }
                current = Some(RawSnapshot {
                    line,
                    ts: row.ts,
                    loc: row.loc,
                    entries: vec![(row.trend, row.rank, row.promoted)],
                });
            }
        }
    }
    if let Some(done) = current {
        sink(Ok(done))?;
    }
    Ok(())
}

fn read_raw<R: Read>(
    reader: R,
    format: LogFormat,
    sink: impl FnMut(Result<RawSnapshot>) -> Result<()>,
) -> Result<()> {
    match format {
        LogFormat::Jsonl => read_jsonl(reader, sink),
        LogFormat::Csv => read_csv(reader, sink),
    }
}

/// Checks a raw snapshot against the catalog and tick grid. `sort_ranks`
/// orders CSV rows, whose order within a snapshot is not significant.
fn resolve(
    raw: RawSnapshot,
    catalog: Option<&Catalog>,
    tick_secs: i64,
    sort_ranks: bool,
) -> Result<(TrendSnapshot, String)> {
    let line = raw.line;
    let ts = Timestamp::parse(&raw.ts)
        .ok_or_else(|| Error::malformed(line, format!("invalid timestamp `{}`", raw.ts)))?;
    if ts.0.rem_euclid(tick_secs) != 0 {
        return Err(Error::OffGrid {
            line,
            timestamp: raw.ts,
            interval_secs: tick_secs,
        });
    }
    let location = match catalog {
        Some(cat) => cat
            .index_of(&raw.loc)
            .ok_or_else(|| Error::UnknownLocation {
                line,
                id: raw.loc.clone(),
            })?,
        None => usize::MAX,
    };
    let mut entries = Vec::with_capacity(raw.entries.len());
    for (text, rank, promoted) in raw.entries {
        if !(1..=super::TOP_N as i64).contains(&rank) {
            return Err(Error::malformed(line, format!("rank out of range: {rank}")));
        }
        let name = TrendName::new(&text).map_err(|e| Error::malformed(line, e.to_string()))?;
        entries.push(TrendEntry {
            name,
            rank: rank as u8,
            promoted,
        });
    }
    if sort_ranks {
        entries.sort_by_key(|e| e.rank);
    }
    TrendSnapshot::check_entries(&entries).map_err(|r| Error::malformed(line, r))?;
    Ok((
        TrendSnapshot {
            location,
            timestamp: ts,
            entries,
        },
        raw.loc,
    ))
}

/// Parses and validates a whole log, stopping at the first problem.
pub fn parse_log<R: Read>(
    reader: R,
    format: LogFormat,
    catalog: Arc<Catalog>,
    tick_secs: i64,
) -> Result<ObservationLog> {
    if tick_secs <= 0 {
        return Err(Error::InvalidArgument(
            "tick interval must be positive".into(),
        ));
    }
    let mut snapshots = Vec::new();
    let mut seen = HashSet::new();
    read_raw(reader, format, |raw| {
        let raw = raw?;
        let line = raw.line;
        let (snap, loc_id) = resolve(raw, Some(&catalog), tick_secs, format == LogFormat::Csv)?;
        if !seen.insert((snap.location, snap.timestamp)) {
            return Err(Error::DuplicateSnapshot {
                line,
                location: loc_id,
                timestamp: snap.timestamp.to_string(),
            });
        }
        snapshots.push(snap);
        Ok(())
    })?;
    ObservationLog::new(catalog, tick_secs, snapshots)
}

/// Scans a log and reports every violation instead of stopping at the first.
/// Without a catalog, location ids are not checked.
pub fn validate_log<R: Read>(
    reader: R,
    format: LogFormat,
    catalog: Option<&Catalog>,
    tick_secs: i64,
) -> Result<ValidationReport> {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    let mut snapshots = 0usize;
    read_raw(reader, format, |raw| {
        let outcome = raw.and_then(|raw| {
            let line = raw.line;
            let (snap, loc_id) = resolve(raw, catalog, tick_secs, format == LogFormat::Csv)?;
            if !seen.insert((loc_id.clone(), snap.timestamp)) {
                return Err(Error::DuplicateSnapshot {
                    line,
                    location: loc_id,
                    timestamp: snap.timestamp.to_string(),
                });
            }
            Ok(())
        });
        match outcome {
            Ok(()) => snapshots += 1,
            Err(e) => violations.push(violation_of(e)),
        }
        Ok(())
    })?;
    let note = (snapshots == 0 && violations.is_empty()).then(|| "no snapshots".to_string());
    Ok(ValidationReport {
        snapshots,
        violations,
        note,
    })
}

fn violation_of(e: Error) -> Violation {
    let line = match &e {
        Error::Malformed { line, .. }
        | Error::UnknownLocation { line, .. }
        | Error::OffGrid { line, .. }
        | Error::DuplicateSnapshot { line, .. } => *line,
        _ => 0,
    };
    let message = match e {
        Error::Malformed { reason, .. } => reason,
        other => {
            let text = other.to_string();
            match text.split_once(": ") {
                Some((prefix, rest)) if prefix.starts_with("line ") => rest.to_string(),
                _ => text,
            }
        }
    };
    Violation { line, message }
}

pub fn write_jsonl<W: Write>(log: &ObservationLog, mut writer: W) -> Result<()> {
    let catalog = log.catalog();
    for s in log.snapshots() {
        let rec = JsonSnapshot {
            ts: s.timestamp.to_string(),
            loc: catalog.get(s.location).id.clone(),
            trends: s
                .entries
                .iter()
                .map(|e| JsonEntry {
                    t: e.name.text().to_string(),
                    r: i64::from(e.rank),
                    p: e.promoted,
                })
                .collect(),
        };
        serde_json::to_writer(&mut writer, &rec)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::Serialization(e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(())
}

/// Writes the CSV layout. Empty snapshots have no rows and are dropped.
pub fn write_csv<W: Write>(log: &ObservationLog, writer: W) -> Result<()> {
    let catalog = log.catalog();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["ts", "loc", "rank", "trend", "promoted"])?;
    for s in log.snapshots() {
        let ts = s.timestamp.to_string();
        let loc = &catalog.get(s.location).id;
        for e in &s.entries {
            wtr.write_record([
                ts.as_str(),
                loc.as_str(),
                &e.rank.to_string(),
                e.name.text(),
                if e.promoted { "true" } else { "false" },
            ])?;
        }
    }
    wtr.flush()
        .map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Location;

    fn catalog() -> Arc<Catalog> {
        Arc::new(
            Catalog::new(vec![
                Location::city("los_angeles", "Los Angeles", 34.05, -118.24),
                Location::city("boston", "Boston", 42.36, -71.06),
                Location::country("us", "United States", 39.8, -98.6),
            ])
            .unwrap(),
        )
    }

    fn ten_entries() -> String {
        (1..=10)
            .map(|r| format!(r##"{{"t":"#t{r}","r":{r},"p":false}}"##))
            .collect::<Vec<_>>()
            .join(",")
    }

    #[test]
    fn one_line_ten_entries() {
        let line = format!(
            r#"{{"ts":"2013-04-12T00:00:00Z","loc":"los_angeles","trends":[{}]}}"#,
            ten_entries()
        );
        let log = parse_log(line.as_bytes(), LogFormat::Jsonl, catalog(), 600).unwrap();
        assert_eq!(log.snapshots().len(), 1);
        assert_eq!(log.snapshots()[0].entries.len(), 10);
    }

    #[test]
    fn rank_eleven_is_rejected() {
        let line = r##"{"ts":"2013-04-12T00:00:00Z","loc":"boston","trends":[{"t":"#a","r":11,"p":false}]}"##;
        let err = parse_log(line.as_bytes(), LogFormat::Jsonl, catalog(), 600).unwrap_err();
        assert_eq!(err.to_string(), "line 1: rank out of range: 11");
    }

    #[test]
    fn duplicate_snapshot_is_rejected() {
        let line = r##"{"ts":"2013-04-12T00:00:00Z","loc":"boston","trends":[{"t":"#a","r":1,"p":false}]}"##;
        let text = format!("{line}\n{line}\n");
        let err = parse_log(text.as_bytes(), LogFormat::Jsonl, catalog(), 600).unwrap_err();
        assert!(
            matches!(err, Error::DuplicateSnapshot { line: 2, .. }),
            "{err}"
        );
        assert!(err.to_string().contains("duplicate snapshot"));
    }

    #[test]
    fn unknown_location_and_off_grid() {
        let bad_loc = r#"{"ts":"2013-04-12T00:00:00Z","loc":"paris","trends":[]}"#;
        assert!(matches!(
            parse_log(bad_loc.as_bytes(), LogFormat::Jsonl, catalog(), 600),
            Err(Error::UnknownLocation { line: 1, .. })
        ));
        let off = r#"{"ts":"2013-04-12T00:05:00Z","loc":"boston","trends":[]}"#;
        assert!(matches!(
            parse_log(off.as_bytes(), LogFormat::Jsonl, catalog(), 600),
            Err(Error::OffGrid { .. })
        ));
    }

    #[test]
    fn malformed_json_reports_line() {
        let text =
            "\n{\"ts\":\"2013-04-12T00:00:00Z\",\"loc\":\"boston\",\"trends\":[]}\n{not json\n";
        let err = parse_log(text.as_bytes(), LogFormat::Jsonl, catalog(), 600).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
    }

    #[test]
    fn csv_rows_group_into_snapshots() {
        let text = "ts,loc,rank,trend,promoted\n\
                    2013-04-12T00:00:00Z,boston,2,#b,false\n\
                    2013-04-12T00:00:00Z,boston,1,#ad,true\n\
                    2013-04-12T00:10:00Z,boston,1,#b,false\n";
        let log = parse_log(text.as_bytes(), LogFormat::Csv, catalog(), 600).unwrap();
        assert_eq!(log.snapshots().len(), 2);
        assert_eq!(log.snapshots()[0].entries[0].name.text(), "#ad");
        assert!(log.snapshots()[0].entries[0].promoted);
    }

    #[test]
    fn csv_split_snapshot_is_duplicate() {
        let text = "ts,loc,rank,trend,promoted\n\
                    2013-04-12T00:00:00Z,boston,1,#a,false\n\
                    2013-04-12T00:00:00Z,los_angeles,1,#a,false\n\
                    2013-04-12T00:00:00Z,boston,2,#b,false\n";
        assert!(matches!(
            parse_log(text.as_bytes(), LogFormat::Csv, catalog(), 600),
            Err(Error::DuplicateSnapshot { .. })
        ));
    }

    #[test]
    fn validate_collects_all_violations() {
        let text = [
            r##"{"ts":"2013-04-12T00:00:00Z","loc":"boston","trends":[{"t":"#a","r":1}]}"##,
            r##"{"ts":"2013-04-12T00:00:00Z","loc":"boston","trends":[{"t":"#a","r":1}]}"##,
            r##"{"ts":"2013-04-12T00:10:00Z","loc":"boston","trends":[{"t":"#a","r":12}]}"##,
            r##"{"ts":"2013-04-12T00:11:00Z","loc":"boston","trends":[]}"##,
            r##"{"ts":"2013-04-12T00:20:00Z","loc":"nowhere","trends":[]}"##,
        ]
        .join("\n");
        let report =
            validate_log(text.as_bytes(), LogFormat::Jsonl, Some(&catalog()), 600).unwrap();
        assert_eq!(report.snapshots, 1);
        let lines: Vec<usize> = report.violations.iter().map(|v| v.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
        assert_eq!(report.violations[1].message, "rank out of range: 12");
    }

    #[test]
    fn validate_empty_input() {
        let report = validate_log(&b""[..], LogFormat::Jsonl, None, 600).unwrap();
        assert_eq!(report.note.as_deref(), Some("no snapshots"));
        assert!(!report.is_clean());
    }
}
