use serde::Serialize;

use super::SimilarityMatrix;

/// One agglomeration step. Node ids follow the usual convention: leaves are
/// `0..n`, the cluster formed by merge `k` is `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    pub labels: Vec<String>,
    pub merges: Vec<Merge>,
}

struct Active {
    node: usize,
    /// Lexicographically smallest label among the members.
    leader: String,
    size: usize,
}

/// Complete-linkage agglomerative clustering on `d = 1 - S`.
///
/// Among equally distant candidate pairs, the pair whose leaders (smallest
/// member label) sort first is merged, so the tree does not depend on input
/// order.
pub fn complete_linkage(matrix: &SimilarityMatrix) -> Dendrogram {
    let n = matrix.len();
    let mut dist: Vec<f64> = (0..n * n).map(|k| matrix.distance(k / n, k % n)).collect();
    let mut slots: Vec<Option<Active>> = matrix
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            Some(Active {
                node: i,
                leader: l.clone(),
                size: 1,
            })
        })
        .collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize)> = None;
        for a in 0..n {
            let Some(ca) = &slots[a] else { continue };
            for b in (a + 1)..n {
                let Some(cb) = &slots[b] else { continue };
                let d = dist[a * n + b];
                let better = match best {
                    None => true,
                    Some((ba, bb)) => {
                        let bd = dist[ba * n + bb];
                        if d != bd {
                            d < bd
                        } else {
                            leader_key(ca, cb)
                                < leader_key(
                                    slots[ba].as_ref().unwrap(),
                                    slots[bb].as_ref().unwrap(),
                                )
                        }
                    }
                };
                if better {
                    best = Some((a, b));
                }
            }
        }
        let (a, b) = best.expect("at least two active clusters");
        let ca = slots[a].take().unwrap();
        let cb = slots[b].take().unwrap();
        let d = dist[a * n + b];
        let (first, second) = if ca.leader <= cb.leader {
            (&ca, &cb)
        } else {
            (&cb, &ca)
        };
        merges.push(Merge {
            left: first.node,
            right: second.node,
            distance: d,
            size: ca.size + cb.size,
        });
        for k in 0..n {
            if slots[k].is_some() {
                let m = dist[a * n + k].max(dist[b * n + k]);
                dist[a * n + k] = m;
                dist[k * n + a] = m;
            }
        }
        slots[a] = Some(Active {
            node: n + step,
            leader: first.leader.clone(),
            size: ca.size + cb.size,
        });
    }
    Dendrogram {
        labels: matrix.labels.clone(),
        merges,
    }
}

fn leader_key<'a>(x: &'a Active, y: &'a Active) -> (&'a str, &'a str) {
    if x.leader <= y.leader {
        (&x.leader, &y.leader)
    } else {
        (&y.leader, &x.leader)
    }
}

impl Dendrogram {
    pub fn n_leaves(&self) -> usize {
        self.labels.len()
    }

    /// Flat clusters after applying the first `n_merges` merges. Labels are
    /// numbered by the position of each cluster's first member.
    fn flatten(&self, n_merges: usize) -> Vec<usize> {
        let n = self.labels.len();
        let mut parent: Vec<usize> = (0..n + self.merges.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (k, m) in self.merges.iter().take(n_merges).enumerate() {
            let (l, r) = (find(&mut parent, m.left), find(&mut parent, m.right));
            parent[l] = n + k;
            parent[r] = n + k;
        }
        let mut label_of_root = std::collections::HashMap::new();
        (0..n)
            .map(|i| {
                let root = find(&mut parent, i);
                let next = label_of_root.len();
                *label_of_root.entry(root).or_insert(next)
            })
            .collect()
    }

    /// Clusters formed by merges strictly below `distance`.
    pub fn cut_at(&self, distance: f64) -> Vec<usize> {
        let k = self
            .merges
            .iter()
            .take_while(|m| m.distance < distance)
            .count();
        self.flatten(k)
    }

    /// Exactly `k` clusters (clamped to `1..=n`).
    pub fn cut_k(&self, k: usize) -> Vec<usize> {
        let n = self.labels.len();
        let k = k.clamp(1.min(n), n);
        self.flatten(n - k)
    }

    /// Distance range `(low, high]` of cuts that yield exactly `k` clusters.
    pub fn cut_interval_for(&self, k: usize) -> Option<(f64, f64)> {
        let n = self.labels.len();
        if k == 0 || k > n {
            return None;
        }
        let applied = n - k;
        let low = if applied == 0 {
            f64::NEG_INFINITY
        } else {
            self.merges[applied - 1].distance
        };
        let high = self
            .merges
            .get(applied)
            .map_or(f64::INFINITY, |m| m.distance);
        (low < high).then_some((low, high))
    }

    pub fn to_newick(&self) -> String {
        let n = self.labels.len();
        if n == 0 {
            return ";".to_string();
        }
        let height = |node: usize| {
            if node < n {
                0.0
            } else {
                self.merges[node - n].distance
            }
        };
        fn render(
            d: &Dendrogram,
            node: usize,
            n: usize,
            height: &dyn Fn(usize) -> f64,
            out: &mut String,
        ) {
            if node < n {
                out.push_str(&newick_label(&d.labels[node]));
                return;
            }
            let m = d.merges[node - n];
            out.push('(');
            for (i, child) in [m.left, m.right].into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render(d, child, n, height, out);
                out.push_str(&format!(":{}", fmt_len(m.distance - height(child))));
            }
            out.push(')');
        }
        let root = if self.merges.is_empty() {
            0
        } else {
            n + self.merges.len() - 1
        };
        let mut out = String::new();
        render(self, root, n, &height, &mut out);
        out.push(';');
        out
    }
}

fn fmt_len(v: f64) -> String {
    let s = format!("{:.6}", v.max(0.0));
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn newick_label(label: &str) -> String {
    if label.chars().any(|c| " ()[]':;,".contains(c)) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn matrix(labels: &[&str], values: Vec<f64>) -> SimilarityMatrix {
        SimilarityMatrix::new(labels.iter().map(|s| s.to_string()).collect(), values).unwrap()
    }

    fn block4() -> SimilarityMatrix {
        // {a, b} and {c, d}: intra 0.9, inter 0.1
        matrix(
            &["a", "b", "c", "d"],
            vec![
                1.0, 0.9, 0.1, 0.1, //
                0.9, 1.0, 0.1, 0.1, //
                0.1, 0.1, 1.0, 0.9, //
                0.1, 0.1, 0.9, 1.0,
            ],
        )
    }

    #[test]
    fn block_matrix_hand_trace() {
        // d(a,b) = d(c,d) = 0.1 tie: leaders (a,b) < (c,d) so {a,b} first;
        // then {c,d}; finally complete linkage joins at max = 0.9.
        let d = complete_linkage(&block4());
        let dist: Vec<f64> = d.merges.iter().map(|m| m.distance).collect();
        assert!((dist[0] - 0.1).abs() < 1e-12 && (dist[1] - 0.1).abs() < 1e-12);
        assert!((dist[2] - 0.9).abs() < 1e-12);
        assert_eq!((d.merges[0].left, d.merges[0].right), (0, 1));
        assert_eq!((d.merges[1].left, d.merges[1].right), (2, 3));
        assert_eq!(d.cut_at(0.5), vec![0, 0, 1, 1]);
        assert_eq!(d.to_newick(), "((a:0.1,b:0.1):0.8,(c:0.1,d:0.1):0.8);");
    }

    #[test]
    fn identical_sets_single_cluster() {
        let m = matrix(&["a", "b", "c"], vec![1.0; 9]);
        let d = complete_linkage(&m);
        assert_eq!(d.cut_at(1e-9), vec![0, 0, 0]);
    }

    #[test]
    fn complete_linkage_uses_max() {
        // a-b close, c close to b but far from a
        let m = matrix(
            &["a", "b", "c"],
            vec![1.0, 0.8, 0.1, 0.8, 1.0, 0.7, 0.1, 0.7, 1.0],
        );
        let d = complete_linkage(&m);
        assert!((d.merges[0].distance - 0.2).abs() < 1e-12);
        assert!((d.merges[1].distance - 0.9).abs() < 1e-12);
        assert_eq!(d.merges[1].size, 3);
    }

    #[test]
    fn quoted_newick_labels() {
        let m = matrix(&["new york", "boston"], vec![1.0, 0.5, 0.5, 1.0]);
        assert_eq!(
            complete_linkage(&m).to_newick(),
            "(boston:0.5,'new york':0.5);"
        );
    }

    #[test]
    fn cut_k_and_interval() {
        let d = complete_linkage(&block4());
        assert_eq!(d.cut_k(2), vec![0, 0, 1, 1]);
        assert_eq!(d.cut_k(4), vec![0, 1, 2, 3]);
        assert_eq!(d.cut_k(1), vec![0, 0, 0, 0]);
        let (lo, hi) = d.cut_interval_for(2).unwrap();
        assert!((lo - 0.1).abs() < 1e-12 && (hi - 0.9).abs() < 1e-12);
        // the tie at 0.1 means three clusters is never a distance cut
        assert!(d.cut_interval_for(3).is_none());
    }

    fn random_matrix() -> impl Strategy<Value = SimilarityMatrix> {
        (2usize..9).prop_flat_map(|n| {
            prop::collection::vec(0u32..=20, n * (n - 1) / 2).prop_map(move |upper| {
                let mut v = vec![1.0; n * n];
                let mut k = 0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let s = f64::from(upper[k]) / 20.0;
                        v[i * n + j] = s;
                        v[j * n + i] = s;
                        k += 1;
                    }
                }
                let labels = (0..n).map(|i| format!("l{i}")).collect();
                SimilarityMatrix::new(labels, v).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn merge_heights_monotone(m in random_matrix()) {
            let d = complete_linkage(&m);
            prop_assert_eq!(d.merges.len(), m.len() - 1);
            for w in d.merges.windows(2) {
                prop_assert!(w[0].distance <= w[1].distance);
            }
            prop_assert_eq!(d.merges.last().unwrap().size, m.len());
        }

        #[test]
        fn extreme_cuts(m in random_matrix()) {
            let d = complete_linkage(&m);
            let n = m.len();
            prop_assert!(d.cut_at(1.0 + 1e-9).iter().all(|&c| c == 0));
            let min_d = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| m.distance(i, j))
                .fold(f64::INFINITY, f64::min);
            let singletons = d.cut_at(min_d);
            prop_assert_eq!(singletons, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn cluster_max_distance_below_cut(m in random_matrix(), cut in 0.0f64..1.0) {
            // complete linkage: members of a flat cluster are all within the cut
            let d = complete_linkage(&m);
            let labels = d.cut_at(cut);
            let n = m.len();
            for i in 0..n {
                for j in 0..n {
                    if labels[i] == labels[j] && i != j {
                        prop_assert!(m.distance(i, j) < cut);
                    }
                }
            }
        }
    }
}
