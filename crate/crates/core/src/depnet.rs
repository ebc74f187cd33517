//! Temporal dependence network between cities.
//!
//! For every trend, each city is stamped with the time the trend first
//! appeared there. Every ordered pair of cities `(i, j)` with
//! `first_seen(i) < first_seen(j)` adds to the weight of the arc `i -> j`.
//! Cities adopting a trend in the same tick cannot be ordered and credit
//! nobody. Re-trending later does not add precedence.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Catalog, EpisodeRow, Timestamp, TrendEpisodeTable};

/// Default half-life of the lag discount, in minutes.
pub const DEFAULT_LAG_HALFLIFE_MIN: f64 = 60.0;

/// How a precedence event is rewarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    /// Every strictly ordered pair adds 1.
    Uniform,
    /// A pair adds `2^(-lag / halflife)` where lag is the adoption gap.
    LagDiscounted,
    /// Only pairs whose earlier city is the unique first adopter count.
    InitiatorOnly,
}

impl WeightingMode {
    pub const ALL: [WeightingMode; 3] = [
        WeightingMode::Uniform,
        WeightingMode::LagDiscounted,
        WeightingMode::InitiatorOnly,
    ];
}

impl fmt::Display for WeightingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightingMode::Uniform => "uniform",
            WeightingMode::LagDiscounted => "lag",
            WeightingMode::InitiatorOnly => "initiator",
        })
    }
}

impl FromStr for WeightingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(WeightingMode::Uniform),
            "lag" | "lag_discounted" => Ok(WeightingMode::LagDiscounted),
            "initiator" | "initiator_only" => Ok(WeightingMode::InitiatorOnly),
            other => Err(Error::InvalidArgument(format!(
                "unknown weighting mode `{other}`"
            ))),
        }
    }
}

/// Lag discount `2^(-lag/halflife)`.
pub fn lag_discount(lag_minutes: f64, halflife_minutes: f64) -> f64 {
    (-lag_minutes / halflife_minutes).exp2()
}

/// Directed weighted graph over cities. Stored densely: weight 0 means no arc.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceNetwork {
    /// Location ids, one per node.
    pub nodes: Vec<String>,
    pub mode: WeightingMode,
    n: usize,
    weights: Vec<f64>,
}

impl DependenceNetwork {
    /// Network from explicit arcs. Self-loops and non-positive weights are
    /// rejected; repeated arcs accumulate.
    pub fn from_arcs(
        nodes: Vec<String>,
        arcs: impl IntoIterator<Item = (usize, usize, f64)>,
        mode: WeightingMode,
    ) -> Result<Self> {
        let n = nodes.len();
        let mut weights = vec![0.0; n * n];
        for (i, j, w) in arcs {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "arc ({i}, {j}) out of range"
                )));
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self-loop on node {i}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "arc ({i}, {j}) has weight {w}"
                )));
            }
            weights[i * n + j] += w;
        }
        Ok(DependenceNetwork {
            nodes,
            mode,
            n,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(move |(k, &w)| (k / n, k % n, w))
    }

    pub fn arc_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn out_strength(&self, i: usize) -> f64 {
        self.weights[i * self.n..(i + 1) * self.n].iter().sum()
    }

    pub fn in_strength(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.weight(i, j)).sum()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.weights[i * self.n..(i + 1) * self.n]
            .iter()
            .filter(|&&w| w > 0.0)
            .count()
    }

    pub fn in_degree(&self, j: usize) -> usize {
        (0..self.n).filter(|&i| self.weight(i, j) > 0.0).count()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }
}

/// First-seen times of one trend, as `(node, time)` pairs.
fn adoption_times(rows: &[EpisodeRow], node_of: &[Option<usize>]) -> Vec<(usize, Timestamp)> {
    rows.iter()
        .filter_map(|r| node_of[r.location].map(|n| (n, r.first_seen)))
        .collect()
}

/// The unique earliest adopter, if the minimum first-seen time is not shared.
pub(crate) fn unique_initiator(times: &[(usize, Timestamp)]) -> Option<(usize, Timestamp)> {
    let min = times.iter().map(|&(_, t)| t).min()?;
    let mut at_min = times.iter().filter(|&&(_, t)| t == min);
    let first = *at_min.next()?;
    at_min.next().is_none().then_some(first)
}

/// Maps catalog indices to node indices (cities only).
fn city_nodes(catalog: &Catalog) -> (Vec<String>, Vec<Option<usize>>) {
    let mut node_of = vec![None; catalog.len()];
    let mut nodes = Vec::with_capacity(catalog.n_cities());
    for c in catalog.cities() {
        node_of[c] = Some(nodes.len());
        nodes.push(catalog.get(c).id.clone());
    }
    (nodes, node_of)
}

/// Builds the dependence network from the city rows of an episode table.
pub fn build_dependence_network(
    table: &TrendEpisodeTable,
    mode: WeightingMode,
    lag_halflife_min: f64,
) -> Result<DependenceNetwork> {
    if mode == WeightingMode::LagDiscounted && !(lag_halflife_min > 0.0) {
        return Err(Error::InvalidArgument(
            "lag half-life must be positive".into(),
        ));
    }
    let (nodes, node_of) = city_nodes(table.catalog());
    let n = nodes.len();
    let mut weights = vec![0.0; n * n];
    for t in table.city_trends() {
        let times = adoption_times(table.city_rows(t), &node_of);
        match mode {
            WeightingMode::InitiatorOnly => {
                if let Some((init, t0)) = unique_initiator(&times) {
                    for &(j, tj) in &times {
                        if tj > t0 {
                            weights[init * n + j] += 1.0;
                        }
                    }
                }
            }
            WeightingMode::Uniform | WeightingMode::LagDiscounted => {
                for &(i, ti) in &times {
                    for &(j, tj) in &times {
                        if ti < tj {
                            weights[i * n + j] += match mode {
                                WeightingMode::Uniform => 1.0,
                                _ => lag_discount(tj.minutes_since(ti), lag_halflife_min),
                            };
                        }
                    }
                }
            }
        }
    }
    Ok(DependenceNetwork {
        nodes,
        mode,
        n,
        weights,
    })
}
