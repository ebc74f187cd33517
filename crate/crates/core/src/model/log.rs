use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{Catalog, TrendName};
use crate::error::{Error, Result};

/// Maximum number of entries in one trend list.
pub const TOP_N: usize = 10;

/// Default sampling interval: ten minutes.
pub const DEFAULT_TICK_SECS: i64 = 600;

/// UTC instant with one-second resolution, stored as seconds since the Unix
/// epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn parse(text: &str) -> Option<Self> {
        DateTime::parse_from_rfc3339(text.trim())
            .ok()
            .map(|dt| Timestamp(dt.with_timezone(&Utc).timestamp()))
    }

    pub fn secs(self) -> i64 {
        self.0
    }

    pub fn plus_secs(self, secs: i64) -> Self {
        Timestamp(self.0 + secs)
    }

    /// Minutes elapsed from `earlier` to `self` (negative if `self` is earlier).
    pub fn minutes_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / 60.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match DateTime::<Utc>::from_timestamp(self.0, 0) {
            Some(dt) => f.write_str(&dt.to_rfc3339_opts(SecondsFormat::Secs, true)),
            None => write!(f, "@{}", self.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendEntry {
    pub name: TrendName,
    pub rank: u8,
    pub promoted: bool,
}

/// One location's ranked trend list at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendSnapshot {
    /// Index into the owning log's catalog.
    pub location: usize,
    pub timestamp: Timestamp,
    pub entries: Vec<TrendEntry>,
}

impl TrendSnapshot {
    /// Checks list length, rank range and ordering, and name uniqueness.
    pub fn check_entries(entries: &[TrendEntry]) -> std::result::Result<(), String> {
        if entries.len() > TOP_N {
            return Err(format!(
                "{} entries exceed the top-{TOP_N} limit",
                entries.len()
            ));
        }
        let mut last_rank = 0u8;
        let mut seen = HashSet::with_capacity(entries.len());
        for e in entries {
            if e.rank == 0 || usize::from(e.rank) > TOP_N {
                return Err(format!("rank out of range: {}", e.rank));
            }
            if e.rank <= last_rank {
                return Err(format!(
                    "ranks must be strictly increasing (got {} after {})",
                    e.rank, last_rank
                ));
            }
            last_rank = e.rank;
            if !seen.insert(e.name.key()) {
                return Err(format!("duplicate trend `{}` in one snapshot", e.name));
            }
        }
        Ok(())
    }
}

/// Time-ordered collection of snapshots over a location catalog.
///
/// Snapshots are kept sorted by `(timestamp, location)`; each
/// `(location, timestamp)` pair occurs at most once and every timestamp is a
/// whole number of ticks from the Unix epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationLog {
    catalog: Arc<Catalog>,
    tick_secs: i64,
    snapshots: Vec<TrendSnapshot>,
}

impl ObservationLog {
    pub fn new(
        catalog: Arc<Catalog>,
        tick_secs: i64,
        mut snapshots: Vec<TrendSnapshot>,
    ) -> Result<Self> {
        if tick_secs <= 0 {
            return Err(Error::InvalidArgument(format!(
                "tick interval must be positive, got {tick_secs}s"
            )));
        }
        snapshots.sort_by_key(|s| (s.timestamp, s.location));
        for (i, s) in snapshots.iter().enumerate() {
            let line = i + 1;
            if s.location >= catalog.len() {
                return Err(Error::UnknownLocation {
                    line,
                    id: format!("#{}", s.location),
                });
            }
            if s.timestamp.0.rem_euclid(tick_secs) != 0 {
                return Err(Error::OffGrid {
                    line,
                    timestamp: s.timestamp.to_string(),
                    interval_secs: tick_secs,
                });
            }
            TrendSnapshot::check_entries(&s.entries).map_err(|r| Error::malformed(line, r))?;
            if i > 0 {
                let prev = &snapshots[i - 1];
                if prev.timestamp == s.timestamp && prev.location == s.location {
                    return Err(Error::DuplicateSnapshot {
                        line,
                        location: catalog.get(s.location).id.clone(),
                        timestamp: s.timestamp.to_string(),
                    });
                }
            }
        }
        Ok(ObservationLog {
            catalog,
            tick_secs,
            snapshots,
        })
    }

    pub(crate) fn from_sorted_unchecked(
        catalog: Arc<Catalog>,
        tick_secs: i64,
        snapshots: Vec<TrendSnapshot>,
    ) -> Self {
        debug_assert!(snapshots
            .windows(2)
            .all(|w| (w[0].timestamp, w[0].location) < (w[1].timestamp, w[1].location)));
        ObservationLog {
            catalog,
            tick_secs,
            snapshots,
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn catalog_arc(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn tick_secs(&self) -> i64 {
        self.tick_secs
    }

    pub fn snapshots(&self) -> &[TrendSnapshot] {
        &self.snapshots
    }

    pub fn entry_count(&self) -> usize {
        self.snapshots.iter().map(|s| s.entries.len()).sum()
    }

    /// Drops promoted entries. Remaining entries keep their original ranks.
    pub fn filter_promoted(&self) -> ObservationLog {
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| TrendSnapshot {
                location: s.location,
                timestamp: s.timestamp,
                entries: s.entries.iter().filter(|e| !e.promoted).cloned().collect(),
            })
            .collect();
        ObservationLog {
            catalog: self.catalog.clone(),
            tick_secs: self.tick_secs,
            snapshots,
        }
    }
}
