use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A place with its own trend list: a city, or the single country-level
/// aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: String,
    pub display_name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub is_country_level: bool,
}

impl Location {
    pub fn city(id: impl Into<String>, name: impl Into<String>, lat: f64, lon: f64) -> Self {
        Location {
            id: id.into(),
            display_name: name.into(),
            latitude: lat,
            longitude: lon,
            is_country_level: false,
        }
    }

    pub fn country(id: impl Into<String>, name: impl Into<String>, lat: f64, lon: f64) -> Self {
        Location {
            is_country_level: true,
            ..Location::city(id, name, lat, lon)
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct CatalogRecord {
    id: String,
    name: String,
    lat: f64,
    lon: f64,
    country_level: bool,
}

/// Validated set of locations. Indices into the catalog are used as compact
/// location handles throughout the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    locations: Vec<Location>,
    index: HashMap<String, usize>,
    country: Option<usize>,
}

impl Catalog {
    pub fn new(locations: Vec<Location>) -> Result<Self> {
        let mut index = HashMap::with_capacity(locations.len());
        let mut country = None;
        for (i, loc) in locations.iter().enumerate() {
            if loc.id.trim().is_empty() {
                return Err(Error::Catalog(format!("entry {} has an empty id", i + 1)));
            }
            if !(-90.0..=90.0).contains(&loc.latitude) {
                return Err(Error::Catalog(format!(
                    "`{}`: latitude {} outside [-90, 90]",
                    loc.id, loc.latitude
                )));
            }
            if !(-180.0..=180.0).contains(&loc.longitude) {
                return Err(Error::Catalog(format!(
                    "`{}`: longitude {} outside [-180, 180]",
                    loc.id, loc.longitude
                )));
            }
            if index.insert(loc.id.clone(), i).is_some() {
                return Err(Error::Catalog(format!("duplicate id `{}`", loc.id)));
            }
            if loc.is_country_level {
                if country.is_some() {
                    return Err(Error::Catalog(
                        "more than one country-level entry".to_string(),
                    ));
                }
                country = Some(i);
            }
        }
        Ok(Catalog {
            locations,
            index,
            country,
        })
    }

    /// Reads the `id,name,lat,lon,country_level` CSV layout.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut locations = Vec::new();
        for (i, rec) in rdr.deserialize::<CatalogRecord>().enumerate() {
            let rec = rec.map_err(|e| Error::Catalog(format!("record {}: {e}", i + 1)))?;
            locations.push(Location {
                id: rec.id,
                display_name: rec.name,
                latitude: rec.lat,
                longitude: rec.lon,
                is_country_level: rec.country_level,
            });
        }
        Catalog::new(locations)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for loc in &self.locations {
            wtr.serialize(CatalogRecord {
                id: loc.id.clone(),
                name: loc.display_name.clone(),
                lat: loc.latitude,
                lon: loc.longitude,
                country_level: loc.is_country_level,
            })?;
        }
        wtr.flush()
            .map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Location {
        &self.locations[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    /// Index of the country-level entry, if the catalog has one.
    pub fn country(&self) -> Option<usize> {
        self.country
    }

    /// Indices of every non-country location, in catalog order.
    pub fn cities(&self) -> impl Iterator<Item = usize> + '_ {
        let country = self.country;
        (0..self.locations.len()).filter(move |&i| Some(i) != country)
    }

    pub fn n_cities(&self) -> usize {
        self.locations.len() - usize::from(self.country.is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_second_country_entry() {
        let err = Catalog::new(vec![
            Location::country("us", "US", 0.0, 0.0),
            Location::country("us2", "US2", 0.0, 0.0),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("more than one country-level"));
    }

    #[test]
    fn rejects_out_of_range_coordinates() {
        assert!(Catalog::new(vec![Location::city("a", "A", 91.0, 0.0)]).is_err());
        assert!(Catalog::new(vec![Location::city("a", "A", 0.0, -180.5)]).is_err());
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = Catalog::new(vec![
            Location::city("a", "A", 0.0, 0.0),
            Location::city("a", "A again", 1.0, 1.0),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("duplicate id"));
    }

    #[test]
    fn csv_round_trip() {
        let cat = Catalog::new(vec![
            Location::city("la", "Los Angeles", 34.05, -118.24),
            Location::country("us", "United States", 39.8, -98.6),
        ])
        .unwrap();
        let mut buf = Vec::new();
        cat.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,name,lat,lon,country_level\n"));
        let back = Catalog::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, cat);
        assert_eq!(back.country(), Some(1));
        assert_eq!(back.cities().collect::<Vec<_>>(), vec![0]);
    }
}
