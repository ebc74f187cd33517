//! Locations, trends and snapshot logs, plus the episode table every
//! analysis starts from.

mod episodes;
pub mod io;
mod location;
mod log;
mod trend;

pub use episodes::{EpisodeRow, TrendEpisodeTable};
pub use io::{
    parse_log, validate_log, write_csv, write_jsonl, LogFormat, ValidationReport, Violation,
};
pub use location::{Catalog, Location};
pub use log::{ObservationLog, Timestamp, TrendEntry, TrendSnapshot, DEFAULT_TICK_SECS, TOP_N};
pub use trend::{TrendKind, TrendName};
