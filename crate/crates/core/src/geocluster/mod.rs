//! Trend-sharing similarity between cities, hierarchical clustering and
//! cluster significance.

mod ari;
mod jaccard;
mod kde;
mod linkage;
mod significance;

use log::warn;
use serde::Serialize;

pub use ari::adjusted_rand_index;
pub use jaccard::{jaccard, jaccard_matrix, SimilarityMatrix};
pub use kde::{silverman_bandwidth, Bandwidth, DensityCurve, Kde};
pub use linkage::{complete_linkage, Dendrogram, Merge};
pub use significance::{welch_t_test, WelchTest};

/// p-value threshold for flagging a cluster as significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CutSpec {
    /// Merges strictly below this distance.
    Distance(f64),
    /// Exactly this many clusters.
    Count(usize),
}

/// Flat clustering at one cut of the dendrogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterModel {
    pub cut: CutSpec,
    /// Cluster label per matrix row; labels are `0..n_clusters`.
    pub assignment: Vec<usize>,
    pub n_clusters: usize,
}

impl ClusterModel {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == cluster)
            .collect()
    }

    /// Similarities of all pairs inside `cluster`.
    pub fn intra_similarities(&self, matrix: &SimilarityMatrix, cluster: usize) -> Vec<f64> {
        let m = self.members(cluster);
        let mut out = Vec::new();
        for (k, &i) in m.iter().enumerate() {
            for &j in &m[k + 1..] {
                out.push(matrix.get(i, j));
            }
        }
        out
    }

    /// Similarities of pairs with exactly one member in `cluster`.
    pub fn boundary_similarities(&self, matrix: &SimilarityMatrix, cluster: usize) -> Vec<f64> {
        let n = self.assignment.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if (self.assignment[i] == cluster) != (self.assignment[j] == cluster) {
                    out.push(matrix.get(i, j));
                }
            }
        }
        out
    }

    /// Similarities of all pairs split across clusters.
    pub fn inter_similarities(&self, matrix: &SimilarityMatrix) -> Vec<f64> {
        let n = self.assignment.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.assignment[i] != self.assignment[j] {
                    out.push(matrix.get(i, j));
                }
            }
        }
        out
    }
}

/// Builds the dendrogram once and cuts it at every requested level.
pub fn cluster(matrix: &SimilarityMatrix, cuts: &[CutSpec]) -> (Dendrogram, Vec<ClusterModel>) {
    let tree = complete_linkage(matrix);
    let models = cuts
        .iter()
        .map(|&cut| {
            let assignment = match cut {
                CutSpec::Distance(d) => tree.cut_at(d),
                CutSpec::Count(k) => tree.cut_k(k),
            };
            let n_clusters = assignment.iter().max().map_or(0, |m| m + 1);
            ClusterModel {
                cut,
                assignment,
                n_clusters,
            }
        })
        .collect();
    (tree, models)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterTests {
    pub cluster: usize,
    pub members: Vec<String>,
    /// Intra similarities against all cross-cluster pairs.
    pub vs_pooled_inter: Option<WelchTest>,
    /// Intra similarities against pairs that straddle this cluster's boundary.
    pub vs_own_inter: Option<WelchTest>,
    /// Intra similarities against each other tested cluster's intra similarities.
    pub vs_other_intra: Vec<(usize, WelchTest)>,
    /// Both inter comparisons reject with intra above inter.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificanceReport {
    pub level: f64,
    pub clusters: Vec<ClusterTests>,
    pub warnings: Vec<String>,
}

impl SignificanceReport {
    pub fn all_significant(&self) -> bool {
        !self.clusters.is_empty() && self.clusters.iter().all(|c| c.significant)
    }
}

fn rejects_upward(test: &Option<WelchTest>) -> bool {
    test.is_some_and(|t| t.rejects_at(SIGNIFICANCE_LEVEL) && t.mean1 > t.mean2)
}

/// Welch t-tests of each cluster's intra-cluster similarities against the
/// inter-cluster ones. Clusters with fewer than two members are skipped.
///
/// Pairwise similarities share endpoints and are not independent samples, so
/// the p-values are descriptive rather than exact.
pub fn cluster_significance(matrix: &SimilarityMatrix, model: &ClusterModel) -> SignificanceReport {
    let mut warnings = Vec::new();
    let pooled = model.inter_similarities(matrix);
    let mut eligible = Vec::new();
    for c in 0..model.n_clusters {
        let size = model.members(c).len();
        if size < 2 {
            let msg = format!("cluster {c} has {size} member(s); excluded from significance tests");
            warn!("{msg}");
            warnings.push(msg);
        } else {
            eligible.push(c);
        }
    }
    if model.n_clusters < 2 {
        let msg = "fewer than two clusters; nothing to compare".to_string();
        warn!("{msg}");
        warnings.push(msg);
        eligible.clear();
    }
    let intra: Vec<Vec<f64>> = eligible
        .iter()
        .map(|&c| model.intra_similarities(matrix, c))
        .collect();
    let clusters = eligible
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let vs_pooled_inter = welch_t_test(&intra[k], &pooled);
            let vs_own_inter = welch_t_test(&intra[k], &model.boundary_similarities(matrix, c));
            if vs_pooled_inter.is_none() {
                let msg = format!("cluster {c} has too few pairs for a t-test");
                warn!("{msg}");
                warnings.push(msg);
            }
            let vs_other_intra = eligible
                .iter()
                .enumerate()
                .filter(|&(other, _)| other != k)
                .filter_map(|(other, &oc)| welch_t_test(&intra[k], &intra[other]).map(|t| (oc, t)))
                .collect();
            ClusterTests {
                cluster: c,
                members: model
                    .members(c)
                    .into_iter()
                    .map(|i| matrix.labels[i].clone())
                    .collect(),
                significant: rejects_upward(&vs_pooled_inter) && rejects_upward(&vs_own_inter),
                vs_pooled_inter,
                vs_own_inter,
                vs_other_intra,
            }
        })
        .collect();
    SignificanceReport {
        level: SIGNIFICANCE_LEVEL,
        clusters,
        warnings,
    }
}
