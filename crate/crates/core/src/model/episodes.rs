use std::collections::HashMap;
use std::sync::Arc;

use super::{Catalog, ObservationLog, Timestamp, TrendKind, TrendName};

/// Presence of one trend at one location.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub trend: usize,
    pub location: usize,
    pub first_seen: Timestamp,
    /// Number of snapshots that listed the trend.
    pub presence_ticks: u32,
    /// Lengths (in ticks) of the maximal runs of consecutive ticks, in time
    /// order. Sums to `presence_ticks`.
    pub runs: Vec<u32>,
}

/// Per `(trend, location)` first-seen time and total trending time.
///
/// A trend listed in `k` snapshots at a location is credited `k` ticks of
/// trending time there, gaps or not. Country-level rows are held apart from
/// city rows.
#[derive(Debug, Clone)]
pub struct TrendEpisodeTable {
    catalog: Arc<Catalog>,
    tick_secs: i64,
    trends: Vec<TrendName>,
    city_rows: Vec<Vec<EpisodeRow>>,
    country_rows: Vec<Option<EpisodeRow>>,
    index: HashMap<TrendName, usize>,
}

struct Acc {
    first_seen: Timestamp,
    last_seen: Timestamp,
    runs: Vec<u32>,
}

impl TrendEpisodeTable {
    /// Aggregates a log into episode rows. Promoted entries should be filtered
    /// out beforehand; they are counted like any other entry here.
    pub fn build(log: &ObservationLog) -> Self {
        let catalog = log.catalog_arc().clone();
        let tick = log.tick_secs();
        let country = catalog.country();

        let mut trends: Vec<TrendName> = Vec::new();
        let mut index: HashMap<TrendName, usize> = HashMap::new();
        let mut acc: HashMap<(usize, usize), Acc> = HashMap::new();

        // snapshots are sorted by (timestamp, location)
        for snap in log.snapshots() {
            for e in &snap.entries {
                let t = *index.entry(e.name.clone()).or_insert_with(|| {
                    trends.push(e.name.clone());
                    trends.len() - 1
                });
                acc.entry((t, snap.location))
                    .and_modify(|a| {
                        if snap.timestamp.0 - a.last_seen.0 == tick {
                            *a.runs.last_mut().unwrap() += 1;
                        } else {
                            a.runs.push(1);
                        }
                        a.last_seen = snap.timestamp;
                    })
                    .or_insert_with(|| Acc {
                        first_seen: snap.timestamp,
                        last_seen: snap.timestamp,
                        runs: vec![1],
                    });
            }
        }

        let mut city_rows = vec![Vec::new(); trends.len()];
        let mut country_rows = vec![None; trends.len()];
        for ((trend, location), a) in acc {
            let row = EpisodeRow {
                trend,
                location,
                first_seen: a.first_seen,
                presence_ticks: a.runs.iter().sum(),
                runs: a.runs,
            };
            if Some(location) == country {
                country_rows[trend] = Some(row);
            } else {
                city_rows[trend].push(row);
            }
        }
        for rows in &mut city_rows {
            rows.sort_by_key(|r| r.location);
        }

        TrendEpisodeTable {
            catalog,
            tick_secs: tick,
            trends,
            city_rows,
            country_rows,
            index,
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn tick_secs(&self) -> i64 {
        self.tick_secs
    }

    pub fn tick_minutes(&self) -> f64 {
        self.tick_secs as f64 / 60.0
    }

    /// Every trend seen anywhere, including country-only trends, in order of
    /// first appearance.
    pub fn trends(&self) -> &[TrendName] {
        &self.trends
    }

    pub fn trend_index(&self, name: &TrendName) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// City rows of one trend, sorted by location index.
    pub fn city_rows(&self, trend: usize) -> &[EpisodeRow] {
        &self.city_rows[trend]
    }

    pub fn country_row(&self, trend: usize) -> Option<&EpisodeRow> {
        self.country_rows[trend].as_ref()
    }

    /// Trends with at least one city row.
    pub fn city_trends(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.trends.len()).filter(move |&t| !self.city_rows[t].is_empty())
    }

    pub fn city_rows_iter(&self) -> impl Iterator<Item = &EpisodeRow> {
        self.city_rows.iter().flatten()
    }

    pub fn row_count(&self) -> usize {
        self.city_rows.iter().map(Vec::len).sum::<usize>()
            + self.country_rows.iter().flatten().count()
    }

    pub fn duration_minutes(&self, row: &EpisodeRow) -> f64 {
        f64::from(row.presence_ticks) * self.tick_minutes()
    }

    /// Restricts the table to hashtags or phrases. `None` keeps everything.
    pub fn filter_kind(&self, kind: Option<TrendKind>) -> TrendEpisodeTable {
        let Some(kind) = kind else {
            return self.clone();
        };
        let mut out = TrendEpisodeTable {
            catalog: self.catalog.clone(),
            tick_secs: self.tick_secs,
            trends: Vec::new(),
            city_rows: Vec::new(),
            country_rows: Vec::new(),
            index: HashMap::new(),
        };
        for (t, name) in self.trends.iter().enumerate() {
            if name.kind() != kind {
                continue;
            }
            let new_t = out.trends.len();
            out.trends.push(name.clone());
            out.index.insert(name.clone(), new_t);
            out.city_rows.push(
                self.city_rows[t]
                    .iter()
                    .map(|r| EpisodeRow {
                        trend: new_t,
                        ..r.clone()
                    })
                    .collect(),
            );
            out.country_rows
                .push(self.country_rows[t].as_ref().map(|r| EpisodeRow {
                    trend: new_t,
                    ..r.clone()
                }));
        }
        out
    }
}
