//! Descriptive statistics over trends: geographic spread, lifetimes and
//! trend entropy.
//!
//! The entropy of a trend is the Shannon entropy (natural log) of how its
//! trending time is split across cities:
//!
//! ```text
//! S = -Σ_i P_i ln P_i,   P_i = t_i / Σ_k t_k
//! ```
//!
//! where `t_i` is the time the trend spent in city `i`'s list. It is 0 for a
//! trend seen in one city and `ln n` for a trend that trended equally long in
//! `n` cities.
//!
//! A trend's *lifetime* is its trending time averaged over the cities where it
//! appeared (total presence divided by `n_locations`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{TrendEpisodeTable, TrendKind, TrendName};

/// Shannon entropy (nats) of a duration vector. Zero durations contribute
/// nothing; an all-zero or empty vector has entropy 0.
pub fn entropy_of(durations: &[f64]) -> f64 {
    let total: f64 = durations.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let s: f64 = durations
        .iter()
        .filter(|&&t| t > 0.0)
        .map(|&t| {
            let p = t / total;
            -p * p.ln()
        })
        .sum();
    s.max(0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrendSpreadStats {
    pub trend: usize,
    pub name: String,
    pub kind: TrendKind,
    pub n_locations: usize,
    /// Trending time summed over cities, in minutes.
    pub total_lifetime_min: f64,
    /// Trending time per city where the trend appeared, in minutes.
    pub lifetime_min: f64,
    pub entropy: f64,
}

/// Per-trend spread, lifetime and entropy for every trend with a city row.
pub fn spread_stats(table: &TrendEpisodeTable) -> Vec<TrendSpreadStats> {
    let tick_min = table.tick_minutes();
    table
        .city_trends()
        .map(|t| {
            let rows = table.city_rows(t);
            let durations: Vec<f64> = rows
                .iter()
                .map(|r| f64::from(r.presence_ticks) * tick_min)
                .collect();
            let total: f64 = durations.iter().sum();
            let name = &table.trends()[t];
            TrendSpreadStats {
                trend: t,
                name: name.text().to_string(),
                kind: name.kind(),
                n_locations: rows.len(),
                total_lifetime_min: total,
                lifetime_min: total / rows.len() as f64,
                entropy: entropy_of(&durations),
            }
        })
        .collect()
}

/// Entropy (nats) of one trend over the cities where it trended.
pub fn trend_entropy(table: &TrendEpisodeTable, trend: &TrendName) -> Result<f64> {
    let t = table
        .trend_index(trend)
        .filter(|&t| !table.city_rows(t).is_empty())
        .ok_or_else(|| Error::UnknownTrend(trend.text().to_string()))?;
    let tick_min = table.tick_minutes();
    let durations: Vec<f64> = table
        .city_rows(t)
        .iter()
        .map(|r| f64::from(r.presence_ticks) * tick_min)
        .collect();
    Ok(entropy_of(&durations))
}

/// Number of trends per count of distinct cities reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpreadHistogram {
    /// `counts[k - 1]` is the number of trends seen in exactly `k` cities.
    pub counts: Vec<usize>,
}

impl SpreadHistogram {
    pub fn get(&self, n_locations: usize) -> usize {
        n_locations
            .checked_sub(1)
            .and_then(|i| self.counts.get(i))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Fraction of trends whose city count lies in `range`.
    pub fn fraction_in(&self, range: std::ops::RangeInclusive<usize>) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let hit: usize = range.map(|k| self.get(k)).sum();
        hit as f64 / total as f64
    }
}

/// One bin per city count `1..=n_cities`.
pub fn spread_histogram(table: &TrendEpisodeTable) -> SpreadHistogram {
    let n = table.catalog().n_cities();
    let mut counts = vec![0usize; n];
    for t in table.city_trends() {
        let k = table.city_rows(t).len();
        if k >= 1 && k <= n {
            counts[k - 1] += 1;
        }
    }
    SpreadHistogram { counts }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LifetimeAxis {
    NLocations,
    Entropy,
}

/// Binning of the entropy axis. The city-count axis always uses one bin per
/// integer count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    pub entropy_bins: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Binning { entropy_bins: 20 }
    }
}

/// Mean and standard error of a quantity per x-bin. Only non-empty bins are
/// emitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedCurve {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub counts: Vec<usize>,
}

impl BinnedCurve {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean lifetime per bin of city count or entropy.
pub fn lifetime_curve(
    stats: &[TrendSpreadStats],
    axis: LifetimeAxis,
    binning: Binning,
) -> BinnedCurve {
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    match axis {
        LifetimeAxis::NLocations => {
            let max = stats.iter().map(|s| s.n_locations).max().unwrap_or(0);
            let mut by_count = vec![Vec::new(); max + 1];
            for s in stats {
                by_count[s.n_locations].push(s.lifetime_min);
            }
            for (k, v) in by_count.into_iter().enumerate() {
                if !v.is_empty() {
                    groups.push((k as f64, v));
                }
            }
        }
        LifetimeAxis::Entropy => {
            if stats.is_empty() {
                return BinnedCurve {
                    x: vec![],
                    mean: vec![],
                    std_err: vec![],
                    counts: vec![],
                };
            }
            let lo = stats
                .iter()
                .map(|s| s.entropy)
                .fold(f64::INFINITY, f64::min);
            let hi = stats
                .iter()
                .map(|s| s.entropy)
                .fold(f64::NEG_INFINITY, f64::max);
            let bins = binning.entropy_bins.max(1);
            let width = (hi - lo) / bins as f64;
            let mut by_bin = vec![Vec::new(); bins];
            for s in stats {
                let b = if width > 0.0 {
                    (((s.entropy - lo) / width) as usize).min(bins - 1)
                } else {
                    0
                };
                by_bin[b].push(s.lifetime_min);
            }
            for (b, v) in by_bin.into_iter().enumerate() {
                if !v.is_empty() {
                    let center = if width > 0.0 {
                        lo + (b as f64 + 0.5) * width
                    } else {
                        lo
                    };
                    groups.push((center, v));
                }
            }
        }
    }
    let mut curve = BinnedCurve {
        x: vec![],
        mean: vec![],
        std_err: vec![],
        counts: vec![],
    };
    for (x, values) in groups {
        let (m, se) = mean_and_se(&values);
        curve.x.push(x);
        curve.mean.push(m);
        curve.std_err.push(se);
        curve.counts.push(values.len());
    }
    curve
}

pub fn lifetime_vs(table: &TrendEpisodeTable, axis: LifetimeAxis, binning: Binning) -> BinnedCurve {
    lifetime_curve(&spread_stats(table), axis, binning)
}

/// Empirical step CDF of trend lifetimes (minutes).
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeCdf {
    sorted: Vec<f64>,
}

impl LifetimeCdf {
    pub fn from_lifetimes(mut lifetimes: Vec<f64>) -> Self {
        lifetimes.sort_by(f64::total_cmp);
        LifetimeCdf { sorted: lifetimes }
    }

    /// Fraction of trends with lifetime `<= minutes`.
    pub fn at(&self, minutes: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        let k = self.sorted.partition_point(|&v| v <= minutes);
        k as f64 / self.sorted.len() as f64
    }

    /// Distinct lifetimes with the CDF value reached at each.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = (i + 1) as f64 / n,
                _ => out.push((v, (i + 1) as f64 / n)),
            }
        }
        out
    }
}

pub fn lifetime_cdf(table: &TrendEpisodeTable) -> LifetimeCdf {
    LifetimeCdf::from_lifetimes(
        spread_stats(table)
            .into_iter()
            .map(|s| s.lifetime_min)
            .collect(),
    )
}

/// Empirical CDF of contiguous episode lengths (minutes): every maximal run
/// of consecutive listings at a city counts once, so a trend that drops off a
/// list and returns contributes several episodes.
pub fn episode_cdf(table: &TrendEpisodeTable) -> LifetimeCdf {
    let tick_min = table.tick_minutes();
    LifetimeCdf::from_lifetimes(
        table
            .city_rows_iter()
            .flat_map(|r| r.runs.iter().map(move |&k| f64::from(k) * tick_min))
            .collect(),
    )
}
