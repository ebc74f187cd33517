//! Multiscale backbone extraction (disparity filter) and source-sink ranking.
//!
//! Under the null model, the `k` arcs leaving a node split its strength like
//! a unit stick broken at `k - 1` uniform points. The probability that an arc
//! carries a share at least `p = w / s` is then
//!
//! ```text
//! alpha_ij = (1 - p)^(k - 1)
//! ```
//!
//! and the arc is significant at level `alpha` when `alpha_ij < alpha`. On a
//! directed network each arc is judged against its source's out-arcs and its
//! target's in-arcs and kept if either side finds it significant. A node with
//! a single arc in the evaluated orientation has no null distribution; that
//! arc is always kept (`alpha_ij = 0`).

use log::warn;
use serde::Serialize;

use crate::depnet::DependenceNetwork;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Judge the arc among the source's outgoing arcs.
    Out,
    /// Judge the arc among the target's incoming arcs.
    In,
}

/// Which endpoint distributions an arc is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RetentionRule {
    #[default]
    BothEndpoints,
    OutOnly,
}

/// Null-model probability of the arc `i -> j` in the given orientation.
pub fn disparity_significance(
    net: &DependenceNetwork,
    i: usize,
    j: usize,
    orientation: Orientation,
) -> Result<f64> {
    let w = net.weight(i, j);
    let (node, strength, degree) = match orientation {
        Orientation::Out => (i, net.out_strength(i), net.out_degree(i)),
        Orientation::In => (j, net.in_strength(j), net.in_degree(j)),
    };
    if !(strength > 0.0) {
        return Err(Error::ZeroStrength(net.nodes[node].clone()));
    }
    if !(w > 0.0) {
        return Err(Error::NoSuchArc(net.nodes[i].clone(), net.nodes[j].clone()));
    }
    Ok(significance_closed_form(w / strength, degree))
}

/// `(1 - p)^(k - 1)`, with degree-1 arcs always significant.
pub fn significance_closed_form(p: f64, degree: usize) -> f64 {
    if degree <= 1 {
        0.0
    } else {
        (1.0 - p).max(0.0).powi(degree as i32 - 1)
    }
}

/// An arc with its effective significance under a retention rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredArc {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
    pub alpha: f64,
}

/// Significance of every arc: the minimum over the tested endpoints.
pub fn score_arcs(net: &DependenceNetwork, rule: RetentionRule) -> Vec<ScoredArc> {
    let n = net.len();
    let out_s: Vec<f64> = (0..n).map(|i| net.out_strength(i)).collect();
    let out_k: Vec<usize> = (0..n).map(|i| net.out_degree(i)).collect();
    let in_s: Vec<f64> = (0..n).map(|j| net.in_strength(j)).collect();
    let in_k: Vec<usize> = (0..n).map(|j| net.in_degree(j)).collect();
    net.arcs()
        .map(|(i, j, w)| {
            let a_out = significance_closed_form(w / out_s[i], out_k[i]);
            let alpha = match rule {
                RetentionRule::OutOnly => a_out,
                RetentionRule::BothEndpoints => {
                    a_out.min(significance_closed_form(w / in_s[j], in_k[j]))
                }
            };
            ScoredArc {
                src: i,
                dst: j,
                weight: w,
                alpha,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackboneNetwork {
    pub nodes: Vec<String>,
    /// Retained arcs `(src, dst, weight)` with their original weights.
    pub arcs: Vec<(usize, usize, f64)>,
    pub alpha: f64,
    /// Every node lies in a single weakly connected component.
    pub connected: bool,
}

impl BackboneNetwork {
    pub fn out_strength(&self, node: usize) -> f64 {
        self.arcs.iter().filter(|a| a.0 == node).map(|a| a.2).sum()
    }

    pub fn in_strength(&self, node: usize) -> f64 {
        self.arcs.iter().filter(|a| a.1 == node).map(|a| a.2).sum()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Whether `n` nodes joined by `arcs` (direction ignored) form one component.
pub fn weakly_connected(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> bool {
    if n <= 1 {
        return true;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut components = n;
    for (a, b) in arcs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
            if components == 1 {
                return true;
            }
        }
    }
    components == 1
}

fn backbone_from_scores(
    net: &DependenceNetwork,
    scored: &[ScoredArc],
    alpha: f64,
) -> BackboneNetwork {
    let arcs: Vec<(usize, usize, f64)> = scored
        .iter()
        .filter(|a| a.alpha < alpha)
        .map(|a| (a.src, a.dst, a.weight))
        .collect();
    let connected = weakly_connected(net.len(), arcs.iter().map(|a| (a.0, a.1)));
    BackboneNetwork {
        nodes: net.nodes.clone(),
        arcs,
        alpha,
        connected,
    }
}

/// Keeps the arcs whose significance is below `alpha`.
pub fn extract_backbone(
    net: &DependenceNetwork,
    alpha: f64,
    rule: RetentionRule,
) -> Result<BackboneNetwork> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(backbone_from_scores(net, &score_arcs(net, rule), alpha))
}

/// Grid used by [`tune_alpha`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneGrid {
    /// Coarse descending step.
    pub step: f64,
    /// Final resolution of the bisection.
    pub resolution: f64,
}

impl Default for TuneGrid {
    fn default() -> Self {
        TuneGrid {
            step: 0.01,
            resolution: 1e-4,
        }
    }
}

/// Smallest alpha on the `resolution` grid whose backbone is still weakly
/// connected.
///
/// Retention only grows with alpha, so connectivity is monotone: a coarse
/// descending scan brackets the threshold and bisection over grid indices
/// pins it down exactly.
pub fn tune_alpha(
    net: &DependenceNetwork,
    rule: RetentionRule,
    grid: TuneGrid,
) -> Result<(f64, BackboneNetwork)> {
    if !(grid.resolution > 0.0 && grid.step >= grid.resolution) {
        return Err(Error::InvalidArgument("invalid tuning grid".into()));
    }
    let scored = score_arcs(net, rule);
    let top = (1.0 / grid.resolution).round() as i64;
    let stride = ((grid.step / grid.resolution).round() as i64).max(1);
    let at = |idx: i64| idx as f64 * grid.resolution;
    let connected = |idx: i64| {
        let alpha = at(idx);
        weakly_connected(
            net.len(),
            scored
                .iter()
                .filter(|a| a.alpha < alpha)
                .map(|a| (a.src, a.dst)),
        )
    };

    if !connected(top) {
        return Err(Error::Disconnected);
    }
    let mut hi = top;
    while hi - stride >= 1 && connected(hi - stride) {
        hi -= stride;
    }
    // `lo` is disconnected or zero; alpha = 0 retains nothing by definition.
    let mut lo = (hi - stride).max(0);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if connected(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha = at(hi);
    Ok((alpha, backbone_from_scores(net, &scored, alpha)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    pub node: String,
    /// `None` for a node with no backbone arcs.
    pub omega: Option<f64>,
    pub s_in: f64,
    pub s_out: f64,
    pub rank: usize,
}

/// Nodes ordered from strongest source to strongest sink.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceSinkRanking {
    pub entries: Vec<RankEntry>,
}

impl SourceSinkRanking {
    pub fn omega_of(&self, node: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.node == node)
            .and_then(|e| e.omega)
    }

    pub fn top_sources(&self, k: usize) -> &[RankEntry] {
        &self.entries[..k.min(self.entries.len())]
    }

    /// The `k` strongest sinks, strongest last.
    pub fn top_sinks(&self, k: usize) -> Vec<&RankEntry> {
        self.entries
            .iter()
            .filter(|e| e.omega.is_some())
            .rev()
            .take(k)
            .collect()
    }
}

/// Weighted source-sink ratio `omega = s_out / (s_in + s_out)` per node.
pub fn source_sink_ranking(backbone: &BackboneNetwork) -> SourceSinkRanking {
    let n = backbone.nodes.len();
    let mut s_in = vec![0.0; n];
    let mut s_out = vec![0.0; n];
    for &(i, j, w) in &backbone.arcs {
        s_out[i] += w;
        s_in[j] += w;
    }
    let mut entries: Vec<RankEntry> = (0..n)
        .map(|k| {
            let total = s_in[k] + s_out[k];
            let omega = if total > 0.0 {
                Some(s_out[k] / total)
            } else {
                warn!(
                    "node `{}` is isolated in the backbone; omega undefined",
                    backbone.nodes[k]
                );
                None
            };
            RankEntry {
                node: backbone.nodes[k].clone(),
                omega,
                s_in: s_in[k],
                s_out: s_out[k],
                rank: 0,
            }
        })
        .collect();
    // sources first; undefined omegas last; stable on node order
    entries.sort_by(|a, b| match (a.omega, b.omega) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    for (r, e) in entries.iter_mut().enumerate() {
        e.rank = r + 1;
    }
    SourceSinkRanking { entries }
}
