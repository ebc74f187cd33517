//! Trendsetting and trend-following cities: before/after counts against
//! country-level trends, mixture-model classes and per-class regressions.

mod counts;
mod gmm;
mod regression;

use log::warn;
use serde::Serialize;

pub use counts::{count_before_after, CityCounts, SetterFollowerCounts};
pub use gmm::{
    covariance_floor, fit_em, fit_gmm, CvScore, EmConfig, EmFit, Gaussian2, GmmConfig, GmmModel,
    Mixture, Point,
};
pub use regression::{ols, RegressionFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CityClass {
    Trendsetter,
    Follower,
    /// Plain component index when the model does not have two components.
    Component(usize),
}

impl std::fmt::Display for CityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CityClass::Trendsetter => f.write_str("trendsetter"),
            CityClass::Follower => f.write_str("follower"),
            CityClass::Component(k) => write!(f, "component_{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    /// One label per city, in the order of the counts.
    pub labels: Vec<CityClass>,
    /// Mixture component read as the trendsetter class.
    pub setter_component: Option<usize>,
    pub warning: Option<String>,
}

impl Classification {
    /// Ids of the cities labeled trendsetters.
    pub fn trendsetters<'a>(&self, counts: &'a SetterFollowerCounts) -> Vec<&'a str> {
        counts
            .cities
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| **l == CityClass::Trendsetter)
            .map(|(c, _)| c.id.as_str())
            .collect()
    }
}

/// Labels cities by their most probable component. With two components, the
/// one whose mean has the larger `n_before / (n_after + 1)` is the
/// trendsetter class.
pub fn classify_cities(counts: &SetterFollowerCounts, gmm: &GmmModel) -> Classification {
    let resp = gmm.mixture.responsibilities(&counts.points());
    let assignment: Vec<usize> = resp.iter().map(|r| gmm::argmax(r)).collect();
    if gmm.mixture.k() != 2 {
        let msg = format!(
            "{} mixture components selected; labels are component indices without setter/follower meaning",
            gmm.mixture.k()
        );
        warn!("{msg}");
        return Classification {
            labels: assignment.into_iter().map(CityClass::Component).collect(),
            setter_component: None,
            warning: Some(msg),
        };
    }
    let ratio = |g: &Gaussian2| g.mean[0] / (g.mean[1] + 1.0);
    let c = &gmm.mixture.components;
    let setter = if ratio(&c[1]) > ratio(&c[0]) { 1 } else { 0 };
    Classification {
        labels: assignment
            .into_iter()
            .map(|a| {
                if a == setter {
                    CityClass::Trendsetter
                } else {
                    CityClass::Follower
                }
            })
            .collect(),
        setter_component: Some(setter),
        warning: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRegression {
    pub class: CityClass,
    pub fit: RegressionFit,
}

/// OLS of `n_after` on `n_before` within each class. Classes with fewer than
/// three cities or no spread in `n_before` are skipped with a warning.
pub fn fit_class_regressions(
    counts: &SetterFollowerCounts,
    classes: &Classification,
) -> (Vec<ClassRegression>, Vec<String>) {
    let mut seen: Vec<CityClass> = Vec::new();
    for l in &classes.labels {
        if !seen.contains(l) {
            seen.push(*l);
        }
    }
    seen.sort_by_key(|c| match c {
        CityClass::Trendsetter => 0,
        CityClass::Follower => 1,
        CityClass::Component(k) => 2 + k,
    });
    let mut fits = Vec::new();
    let mut warnings = Vec::new();
    for class in seen {
        let (x, y): (Vec<f64>, Vec<f64>) = counts
            .cities
            .iter()
            .zip(&classes.labels)
            .filter(|(_, l)| **l == class)
            .map(|(c, _)| (c.n_before, c.n_after))
            .unzip();
        match ols(&x, &y) {
            Some(fit) => fits.push(ClassRegression { class, fit }),
            None => {
                let msg = format!(
                    "class {class} has {} cities or no spread; regression skipped",
                    x.len()
                );
                warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    (fits, warnings)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;
    use crate::depnet::WeightingMode;

    fn counts_from(points: &[Point]) -> SetterFollowerCounts {
        SetterFollowerCounts {
            mode: WeightingMode::Uniform,
            cities: points
                .iter()
                .enumerate()
                .map(|(i, p)| CityCounts {
                    location: i,
                    id: format!("c{i}"),
                    n_before: p[0],
                    n_after: p[1],
                })
                .collect(),
            country_trends: 0,
            unanchored: 0,
        }
    }

    fn setters_and_followers(seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Normal::new(0.0, 8.0).unwrap();
        let mut pts: Vec<Point> = (0..11)
            .map(|_| [900.0 + f.sample(&mut rng), 60.0 + f.sample(&mut rng)])
            .collect();
        pts.extend((0..52).map(|_| [100.0 + f.sample(&mut rng), 850.0 + f.sample(&mut rng)]));
        pts
    }

    #[test]
    fn high_before_component_is_trendsetter() {
        let pts = setters_and_followers(1);
        let counts = counts_from(&pts);
        let gmm = fit_gmm(
            &pts,
            &GmmConfig {
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(gmm.selected_k, 2);
        let classes = classify_cities(&counts, &gmm);
        let expected: Vec<String> = (0..11).map(|i| format!("c{i}")).collect();
        assert_eq!(classes.trendsetters(&counts), expected);
        let (fits, warnings) = fit_class_regressions(&counts, &classes);
        assert_eq!(fits.len(), 2);
        assert!(warnings.is_empty());
        assert_eq!(fits[0].class, CityClass::Trendsetter);
        assert_eq!(fits[0].fit.n, 11);
    }

    #[test]
    fn labels_invariant_to_component_order() {
        let pts = setters_and_followers(2);
        let counts = counts_from(&pts);
        let gmm = fit_gmm(
            &pts,
            &GmmConfig {
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let mut swapped = gmm.clone();
        swapped.mixture.weights.reverse();
        swapped.mixture.components.reverse();
        assert_eq!(
            classify_cities(&counts, &gmm).labels,
            classify_cities(&counts, &swapped).labels
        );
    }

    #[test]
    fn outlier_gets_its_own_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = Normal::new(0.0, 5.0).unwrap();
        let mut pts: Vec<Point> = (0..40)
            .map(|_| [50.0 + f.sample(&mut rng), 500.0 + f.sample(&mut rng)])
            .collect();
        pts.push([2000.0, 10.0]);
        let fit = fit_em(&pts, 2, &EmConfig::default(), 9).unwrap();
        let labels = fit.mixture.predict(&pts);
        let outlier = labels[40];
        assert!(labels[..40].iter().all(|&l| l != outlier));
    }

    #[test]
    fn identical_cities_warn() {
        let pts = vec![[10.0, 10.0]; 30];
        let counts = counts_from(&pts);
        let gmm = fit_gmm(&pts, &GmmConfig::default()).unwrap();
        let classes = classify_cities(&counts, &gmm);
        assert!(classes.warning.is_some());
        assert!(classes.labels.iter().all(|&l| l == CityClass::Component(0)));
        let (fits, warnings) = fit_class_regressions(&counts, &classes);
        assert!(fits.is_empty());
        assert_eq!(warnings.len(), 1);
    }
}
