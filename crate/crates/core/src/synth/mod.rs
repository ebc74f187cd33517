//! Synthetic observation logs with planted geographic clusters, hub
//! trendsetters and country-level trends.

mod cities;

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Catalog, Location, ObservationLog, Timestamp, TrendEntry, TrendName, TrendSnapshot, TOP_N,
};

/// 2013-04-12T00:00:00Z.
pub const DEFAULT_EPOCH: i64 = 1_365_724_800;

/// Generator parameters. Times are in ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Cities drawn from the built-in list of 63.
    pub n_locations: usize,
    /// Geographic clusters, formed as west-to-east longitude bands.
    pub n_clusters: usize,
    pub n_hubs: usize,
    pub ticks: u32,
    pub tick_secs: i64,
    /// Unix time of tick 0.
    pub epoch: i64,
    pub n_trends: usize,
    /// Share of trends that spread nationwide; rounded to a whole count.
    pub global_trend_fraction: f64,
    /// Probability that a local trend stays inside its cluster.
    pub p_local: f64,
    /// Probability that a local trend never leaves its origin city.
    pub p_single_location: f64,
    /// Probability that a global trend starts at a hub.
    pub hub_origin_prob: f64,
    /// Probability that a global trend reaches each non-origin city.
    pub global_reach: f64,
    /// Hubs adopt a global trend after one tick plus a geometric delay with
    /// this mean.
    pub hub_delay_mean: f64,
    /// Ticks between a global trend's onset and the earliest non-hub adoption.
    pub hub_lead: u32,
    /// Mean of the geometric delay added after `hub_lead` for non-hubs.
    pub follower_delay_mean: f64,
    /// Local trends: one tick plus a geometric delay with this mean.
    pub local_delay_mean: f64,
    /// Median per-location lifetime of a local trend.
    pub lifetime_median: f64,
    /// Log-scale spread of lifetimes.
    pub lifetime_sigma: f64,
    /// Global trends live this many times longer at each location.
    pub global_lifetime_factor: f64,
    /// Share of cities that must list a global trend before the country does.
    pub country_threshold: f64,
    pub hashtag_fraction: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 2013,
            n_locations: 63,
            n_clusters: 3,
            n_hubs: 11,
            ticks: 7200,
            tick_secs: 600,
            epoch: DEFAULT_EPOCH,
            n_trends: 3000,
            global_trend_fraction: 0.35,
            p_local: 0.9,
            p_single_location: 0.6,
            hub_origin_prob: 0.8,
            global_reach: 0.97,
            hub_delay_mean: 1.0,
            hub_lead: 6,
            follower_delay_mean: 3.0,
            local_delay_mean: 3.0,
            lifetime_median: 6.0,
            lifetime_sigma: 0.5,
            global_lifetime_factor: 5.0,
            country_threshold: 0.25,
            hashtag_fraction: 0.4,
        }
    }
}

impl GeneratorConfig {
    pub const PRESETS: [&'static str; 2] = ["paper-like", "small"];

    /// `paper-like`: 63 cities over 50 days. `small`: 21 cities over 10 days.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-like" => Ok(Self::default()),
            "small" => Ok(GeneratorConfig {
                n_locations: 21,
                n_hubs: 4,
                ticks: 1440,
                n_trends: 400,
                ..Self::default()
            }),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset `{other}` (expected one of {})",
                Self::PRESETS.join(", ")
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InfeasibleConfig(msg));
        if !(1..=cities::CITIES.len()).contains(&self.n_locations) {
            return bad(format!(
                "n_locations must be in 1..={}",
                cities::CITIES.len()
            ));
        }
        if self.n_clusters == 0 || self.n_clusters > self.n_locations {
            return bad("n_clusters must be in 1..=n_locations".into());
        }
        if self.n_hubs > self.n_locations {
            return bad("n_hubs exceeds n_locations".into());
        }
        if self.ticks == 0 || self.n_trends == 0 || self.tick_secs <= 0 {
            return bad("ticks, n_trends and tick_secs must be positive".into());
        }
        if self.epoch.rem_euclid(self.tick_secs) != 0 {
            return bad("epoch must lie on the tick grid".into());
        }
        for (name, p) in [
            ("global_trend_fraction", self.global_trend_fraction),
            ("p_local", self.p_local),
            ("p_single_location", self.p_single_location),
            ("hub_origin_prob", self.hub_origin_prob),
            ("global_reach", self.global_reach),
            ("country_threshold", self.country_threshold),
            ("hashtag_fraction", self.hashtag_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        for (name, v) in [
            ("hub_delay_mean", self.hub_delay_mean),
            ("follower_delay_mean", self.follower_delay_mean),
            ("local_delay_mean", self.local_delay_mean),
            ("lifetime_sigma", self.lifetime_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative"));
            }
        }
        if !(self.lifetime_median > 0.0) || !(self.global_lifetime_factor > 0.0) {
            return bad("lifetime_median and global_lifetime_factor must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationTruth {
    pub id: String,
    pub cluster: usize,
    pub is_hub: bool,
}

/// Where and when a trend was actually listed, as half-open tick ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Appearance {
    pub location: String,
    pub runs: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendTruth {
    pub name: String,
    pub global: bool,
    pub origin: String,
    /// Home cluster of a local trend.
    pub cluster: Option<usize>,
    pub onset: u32,
    /// Cities planted to adopt the trend, top-10 contention aside.
    pub spread: Vec<String>,
    /// Tick at which the country list picks the trend up.
    pub country_tick: Option<u32>,
    pub appearances: Vec<Appearance>,
}

/// Planted structure behind a generated log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub epoch: i64,
    pub tick_secs: i64,
    pub ticks: u32,
    /// Cities in catalog order.
    pub locations: Vec<LocationTruth>,
    pub trends: Vec<TrendTruth>,
}

impl GroundTruth {
    pub fn hubs(&self) -> Vec<&str> {
        self.locations
            .iter()
            .filter(|l| l.is_hub)
            .map(|l| l.id.as_str())
            .collect()
    }

    pub fn cluster_of(&self, id: &str) -> Option<usize> {
        self.locations
            .iter()
            .find(|l| l.id == id)
            .map(|l| l.cluster)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Picks the cities, their clusters and hubs. Returns the catalog (cities in
/// list order, country last) and the per-city truth.
fn layout(config: &GeneratorConfig) -> Result<(Catalog, Vec<LocationTruth>)> {
    let n_all = cities::CITIES.len();
    let mut by_lon: Vec<usize> = (0..n_all).collect();
    by_lon.sort_by(|&a, &b| cities::CITIES[a].3.total_cmp(&cities::CITIES[b].3));
    // evenly spaced along longitude so subsets keep the geographic spread
    let mut chosen: Vec<usize> = (0..config.n_locations)
        .map(|i| by_lon[i * n_all / config.n_locations])
        .collect();
    let band: HashMap<usize, usize> = chosen
        .iter()
        .enumerate()
        .map(|(rank, &c)| (c, rank * config.n_clusters / config.n_locations))
        .collect();
    chosen.sort_unstable();

    let mut hubs: Vec<usize> = cities::HUBS
        .iter()
        .filter_map(|h| chosen.iter().copied().find(|&c| cities::CITIES[c].0 == *h))
        .take(config.n_hubs)
        .collect();
    for &c in &chosen {
        if hubs.len() >= config.n_hubs {
            break;
        }
        if !hubs.contains(&c) {
            hubs.push(c);
        }
    }

    let mut locations: Vec<Location> = chosen
        .iter()
        .map(|&c| {
            let (id, name, lat, lon) = cities::CITIES[c];
            Location::city(id, name, lat, lon)
        })
        .collect();
    let (id, name, lat, lon) = cities::COUNTRY;
    locations.push(Location::country(id, name, lat, lon));
    let truth = chosen
        .iter()
        .map(|&c| LocationTruth {
            id: cities::CITIES[c].0.to_string(),
            cluster: band[&c],
            is_hub: hubs.contains(&c),
        })
        .collect();
    Ok((Catalog::new(locations)?, truth))
}

fn geometric(mean: f64) -> Geometric {
    Geometric::new(1.0 / (1.0 + mean)).expect("valid success probability")
}

struct Planted {
    trend: usize,
    start: u32,
    end: u32,
}

/// Draws a log and the structure planted in it. Deterministic given the
/// config, seed included.
pub fn generate(config: &GeneratorConfig) -> Result<(ObservationLog, GroundTruth)> {
    config.validate()?;
    let (catalog, loc_truth) = layout(config)?;
    let n_cities = loc_truth.len();
    let country = n_cities;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let members: Vec<Vec<usize>> = (0..config.n_clusters)
        .map(|k| {
            (0..n_cities)
                .filter(|&c| loc_truth[c].cluster == k)
                .collect()
        })
        .collect();
    let hubs: Vec<usize> = (0..n_cities).filter(|&c| loc_truth[c].is_hub).collect();
    let non_hubs: Vec<usize> = (0..n_cities).filter(|&c| !loc_truth[c].is_hub).collect();
    let country_quota = ((config.country_threshold * n_cities as f64).ceil() as usize).max(1);

    let lifetime = LogNormal::new(config.lifetime_median.ln(), config.lifetime_sigma)
        .map_err(|e| Error::InfeasibleConfig(e.to_string()))?;
    let hub_delay = geometric(config.hub_delay_mean);
    let follower_delay = geometric(config.follower_delay_mean);
    let local_delay = geometric(config.local_delay_mean);

    let n_global = (config.global_trend_fraction * config.n_trends as f64).round() as usize;
    let mut is_global: Vec<bool> = (0..config.n_trends).map(|i| i < n_global).collect();
    is_global.shuffle(&mut rng);

    let mut planted: Vec<Vec<Planted>> = (0..=n_cities).map(|_| Vec::new()).collect();
    let mut trends = Vec::with_capacity(config.n_trends);
    let mut names = Vec::with_capacity(config.n_trends);
    for (t, &global) in is_global.iter().enumerate() {
        let hashtag = rng.gen_bool(config.hashtag_fraction);
        let name = if hashtag {
            format!("#tf{t:05}")
        } else {
            format!("topic {t:05}")
        };
        let onset = rng.gen_range(0..config.ticks);
        // (city, adoption tick)
        let mut adopters: Vec<(usize, u32)> = Vec::new();
        let mut home = None;
        let origin;
        if global {
            let from_hub =
                !hubs.is_empty() && (non_hubs.is_empty() || rng.gen_bool(config.hub_origin_prob));
            origin = *if from_hub {
                hubs.choose(&mut rng)
            } else {
                non_hubs.choose(&mut rng)
            }
            .expect("non-empty");
            for (c, loc) in loc_truth.iter().enumerate().take(n_cities) {
                if c == origin {
                    adopters.push((c, onset));
                } else if rng.gen_bool(config.global_reach) {
                    let delay = if loc.is_hub {
                        1 + hub_delay.sample(&mut rng)
                    } else {
                        u64::from(config.hub_lead) + follower_delay.sample(&mut rng)
                    };
                    adopters.push((
                        c,
                        onset.saturating_add(delay.min(u64::from(u32::MAX)) as u32),
                    ));
                }
            }
        } else {
            let k = rng.gen_range(0..config.n_clusters);
            home = Some(k);
            origin = *members[k].choose(&mut rng).expect("clusters are non-empty");
            let mut spread = vec![origin];
            if !rng.gen_bool(config.p_single_location) && members[k].len() > 1 {
                let size = rng.gen_range(2..=members[k].len());
                let others: Vec<usize> = members[k]
                    .iter()
                    .copied()
                    .filter(|&c| c != origin)
                    .collect();
                spread.extend(others.choose_multiple(&mut rng, size - 1));
            }
            if !rng.gen_bool(config.p_local) {
                let outside: Vec<usize> = (0..n_cities)
                    .filter(|&c| loc_truth[c].cluster != k)
                    .collect();
                let leaks = rng.gen_range(1..=3).min(outside.len());
                spread.extend(outside.choose_multiple(&mut rng, leaks));
            }
            for c in spread {
                let at = if c == origin {
                    onset
                } else {
                    onset.saturating_add(1 + local_delay.sample(&mut rng) as u32)
                };
                adopters.push((c, at));
            }
        }
        adopters.sort_unstable();

        let country_tick = if global && adopters.len() >= country_quota {
            let mut ticks: Vec<u32> = adopters.iter().map(|a| a.1).collect();
            ticks.sort_unstable();
            Some(ticks[country_quota - 1]).filter(|&at| at < config.ticks)
        } else {
            None
        };
        let scale = if global {
            config.global_lifetime_factor
        } else {
            1.0
        };
        let mut plant = |loc: usize, start: u32, rng: &mut ChaCha8Rng| {
            let life = (scale * lifetime.sample(rng)).round().max(1.0) as u32;
            if start < config.ticks {
                planted[loc].push(Planted {
                    trend: t,
                    start,
                    end: start.saturating_add(life).min(config.ticks),
                });
            }
        };
        for &(c, at) in &adopters {
            plant(c, at, &mut rng);
        }
        if let Some(at) = country_tick {
            plant(country, at, &mut rng);
        }
        trends.push(TrendTruth {
            name: name.clone(),
            global,
            origin: loc_truth[origin].id.clone(),
            cluster: home,
            onset,
            spread: adopters
                .iter()
                .map(|&(c, _)| loc_truth[c].id.clone())
                .collect(),
            country_tick,
            appearances: Vec::new(),
        });
        names.push(TrendName::new(&name)?);
    }

    let capacity = u64::from(config.ticks) * TOP_N as u64;
    for (loc, list) in planted.iter().enumerate() {
        let load: u64 = list.iter().map(|p| u64::from(p.end - p.start)).sum();
        if load > capacity {
            return Err(Error::InfeasibleConfig(format!(
                "location `{}` needs {load} trend-ticks but its top-{TOP_N} holds only {capacity}",
                catalog.get(loc).id
            )));
        }
    }

    // per tick, per location: listed trends in rank order
    let mut listed: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); config.ticks as usize];
    let mut runs: HashMap<(usize, usize), Vec<(u32, u32)>> = HashMap::new();
    for (loc, list) in planted.iter_mut().enumerate() {
        list.sort_by_key(|p| (p.start, p.trend));
        let mut next = 0;
        let mut active: Vec<(usize, u32)> = Vec::new();
        for tick in 0..config.ticks {
            active.retain(|&(_, end)| end > tick);
            while next < list.len() && list[next].start == tick {
                active.push((list[next].trend, list[next].end));
                next += 1;
            }
            if active.is_empty() {
                continue;
            }
            // most remaining lifetime first; overflow beyond the top-10 is
            // hidden this tick but stays active
            active.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let shown: Vec<usize> = active.iter().take(TOP_N).map(|a| a.0).collect();
            for &t in &shown {
                let r = runs.entry((t, loc)).or_default();
                match r.last_mut() {
                    Some(last) if last.1 == tick => last.1 += 1,
                    _ => r.push((tick, tick + 1)),
                }
            }
            listed[tick as usize].push((loc, shown));
        }
    }

    let mut keys: Vec<(usize, usize)> = runs.keys().copied().collect();
    keys.sort_unstable();
    for (t, loc) in keys {
        trends[t].appearances.push(Appearance {
            location: catalog.get(loc).id.clone(),
            runs: runs.remove(&(t, loc)).expect("key present"),
        });
    }

    let mut snapshots = Vec::new();
    for (tick, locs) in listed.into_iter().enumerate() {
        let timestamp = Timestamp(config.epoch + tick as i64 * config.tick_secs);
        for (loc, shown) in locs {
            snapshots.push(TrendSnapshot {
                location: loc,
                timestamp,
                entries: shown
                    .into_iter()
                    .enumerate()
                    .map(|(r, t)| TrendEntry {
                        name: names[t].clone(),
                        rank: r as u8 + 1,
                        promoted: false,
                    })
                    .collect(),
            });
        }
    }
    let log = ObservationLog::from_sorted_unchecked(Arc::new(catalog), config.tick_secs, snapshots);
    let truth = GroundTruth {
        epoch: config.epoch,
        tick_secs: config.tick_secs,
        ticks: config.ticks,
        locations: loc_truth,
        trends,
    };
    Ok((log, truth))
}
