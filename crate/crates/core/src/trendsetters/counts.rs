use log::debug;
use serde::Serialize;

use crate::depnet::{lag_discount, unique_initiator, WeightingMode};
use crate::error::{Error, Result};
use crate::model::TrendEpisodeTable;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CityCounts {
    /// Catalog index.
    pub location: usize,
    pub id: String,
    pub n_before: f64,
    pub n_after: f64,
}

/// Per-city counts of adoptions before and after each country-level trend
/// reached the country list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetterFollowerCounts {
    pub mode: WeightingMode,
    pub cities: Vec<CityCounts>,
    /// Trends that reached the country list.
    pub country_trends: usize,
    /// Country-level trends with no city rows.
    pub unanchored: usize,
}

impl SetterFollowerCounts {
    pub fn points(&self) -> Vec<[f64; 2]> {
        self.cities
            .iter()
            .map(|c| [c.n_before, c.n_after])
            .collect()
    }
}

/// Counts, for every city, how often it listed a country-level trend strictly
/// before (`n_before`) or strictly after (`n_after`) the country list did.
///
/// `n_after` always counts 1 per trend. `n_before` is weighted by `mode`:
/// 1 per trend, `2^(-lag/halflife)` with the lag measured from the earliest
/// city adoption, or 1 for the unique earliest city only.
pub fn count_before_after(
    table: &TrendEpisodeTable,
    mode: WeightingMode,
    lag_halflife_min: f64,
) -> Result<SetterFollowerCounts> {
    let catalog = table.catalog();
    if catalog.country().is_none() {
        return Err(Error::InsufficientData(
            "catalog has no country-level location".into(),
        ));
    }
    if mode == WeightingMode::LagDiscounted && !(lag_halflife_min > 0.0) {
        return Err(Error::InvalidArgument(
            "lag half-life must be positive".into(),
        ));
    }
    let mut slot = vec![None; catalog.len()];
    let mut cities: Vec<CityCounts> = catalog
        .cities()
        .enumerate()
        .map(|(k, c)| {
            slot[c] = Some(k);
            CityCounts {
                location: c,
                id: catalog.get(c).id.clone(),
                n_before: 0.0,
                n_after: 0.0,
            }
        })
        .collect();

    let (mut country_trends, mut unanchored) = (0, 0);
    for t in 0..table.trends().len() {
        let Some(country) = table.country_row(t) else {
            continue;
        };
        country_trends += 1;
        let star = country.first_seen;
        let rows = table.city_rows(t);
        if rows.is_empty() {
            debug!(
                "country trend `{}` never listed in a city",
                table.trends()[t]
            );
            unanchored += 1;
            continue;
        }
        let times: Vec<(usize, _)> = rows.iter().map(|r| (r.location, r.first_seen)).collect();
        let earliest = times.iter().map(|&(_, ts)| ts).min().expect("non-empty");
        let initiator = unique_initiator(&times).map(|(loc, _)| loc);
        for &(loc, ts) in &times {
            let Some(k) = slot[loc] else { continue };
            if ts > star {
                cities[k].n_after += 1.0;
            } else if ts < star {
                cities[k].n_before += match mode {
                    WeightingMode::Uniform => 1.0,
                    WeightingMode::LagDiscounted => {
                        lag_discount(ts.minutes_since(earliest), lag_halflife_min)
                    }
                    WeightingMode::InitiatorOnly => {
                        if initiator == Some(loc) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
            }
        }
    }
    Ok(SetterFollowerCounts {
        mode,
        cities,
        country_trends,
        unanchored,
    })
}
