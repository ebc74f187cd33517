/// `(id, display name, latitude, longitude)` of the built-in US locations.
pub(super) const CITIES: [(&str, &str, f64, f64); 63] = [
    ("albuquerque", "Albuquerque", 35.08, -106.65),
    ("atlanta", "Atlanta", 33.75, -84.39),
    ("austin", "Austin", 30.27, -97.74),
    ("baltimore", "Baltimore", 39.29, -76.61),
    ("baton_rouge", "Baton Rouge", 30.45, -91.15),
    ("birmingham", "Birmingham", 33.52, -86.80),
    ("boston", "Boston", 42.36, -71.06),
    ("charlotte", "Charlotte", 35.23, -80.84),
    ("chicago", "Chicago", 41.88, -87.63),
    ("cincinnati", "Cincinnati", 39.10, -84.51),
    ("cleveland", "Cleveland", 41.50, -81.69),
    ("colorado_springs", "Colorado Springs", 38.83, -104.82),
    ("columbus", "Columbus", 39.96, -83.00),
    ("dallas_ft_worth", "Dallas-Ft. Worth", 32.78, -96.80),
    ("denver", "Denver", 39.74, -104.99),
    ("detroit", "Detroit", 42.33, -83.05),
    ("el_paso", "El Paso", 31.76, -106.49),
    ("fresno", "Fresno", 36.74, -119.79),
    ("greensboro", "Greensboro", 36.07, -79.79),
    ("harrisburg", "Harrisburg", 40.27, -76.88),
    ("honolulu", "Honolulu", 21.31, -157.86),
    ("houston", "Houston", 29.76, -95.37),
    ("indianapolis", "Indianapolis", 39.77, -86.16),
    ("jackson", "Jackson", 32.30, -90.18),
    ("jacksonville", "Jacksonville", 30.33, -81.66),
    ("kansas_city", "Kansas City", 39.10, -94.58),
    ("las_vegas", "Las Vegas", 36.17, -115.14),
    ("long_beach", "Long Beach", 33.77, -118.19),
    ("los_angeles", "Los Angeles", 34.05, -118.24),
    ("louisville", "Louisville", 38.25, -85.76),
    ("memphis", "Memphis", 35.15, -90.05),
    ("mesa", "Mesa", 33.42, -111.83),
    ("miami", "Miami", 25.76, -80.19),
    ("milwaukee", "Milwaukee", 43.04, -87.91),
    ("minneapolis", "Minneapolis", 44.98, -93.27),
    ("nashville", "Nashville", 36.16, -86.78),
    ("new_haven", "New Haven", 41.31, -72.92),
    ("new_orleans", "New Orleans", 29.95, -90.07),
    ("new_york", "New York", 40.71, -74.01),
    ("norfolk", "Norfolk", 36.85, -76.29),
    ("oklahoma_city", "Oklahoma City", 35.47, -97.52),
    ("omaha", "Omaha", 41.26, -95.93),
    ("orlando", "Orlando", 28.54, -81.38),
    ("philadelphia", "Philadelphia", 39.95, -75.17),
    ("phoenix", "Phoenix", 33.45, -112.07),
    ("pittsburgh", "Pittsburgh", 40.44, -80.00),
    ("portland", "Portland", 45.52, -122.68),
    ("providence", "Providence", 41.82, -71.41),
    ("raleigh", "Raleigh", 35.78, -78.64),
    ("richmond", "Richmond", 37.54, -77.44),
    ("sacramento", "Sacramento", 38.58, -121.49),
    ("salt_lake_city", "Salt Lake City", 40.76, -111.89),
    ("san_antonio", "San Antonio", 29.42, -98.49),
    ("san_diego", "San Diego", 32.72, -117.16),
    ("san_francisco", "San Francisco", 37.77, -122.42),
    ("san_jose", "San Jose", 37.34, -121.89),
    ("seattle", "Seattle", 47.61, -122.33),
    ("st_louis", "St. Louis", 38.63, -90.20),
    ("tallahassee", "Tallahassee", 30.44, -84.28),
    ("tampa", "Tampa", 27.95, -82.46),
    ("tucson", "Tucson", 32.22, -110.97),
    ("virginia_beach", "Virginia Beach", 36.85, -75.98),
    ("washington", "Washington", 38.91, -77.04),
];

/// Hub cities, picked first when hubs are assigned.
pub(super) const HUBS: [&str; 11] = [
    "raleigh",
    "detroit",
    "philadelphia",
    "houston",
    "new_york",
    "dallas_ft_worth",
    "boston",
    "denver",
    "atlanta",
    "los_angeles",
    "seattle",
];

pub(super) const COUNTRY: (&str, &str, f64, f64) =
    ("united_states", "United States", 39.83, -98.58);
