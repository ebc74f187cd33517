use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::TrendEpisodeTable;

/// Symmetric matrix of pairwise trend-set similarities with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityMatrix {
    pub labels: Vec<String>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major values, checking symmetry, range and the
    /// unit diagonal.
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for {n} labels, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry {i} is not 1"
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(0.0..=1.0).contains(&v) || v != values[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i}, {j}) = {v} is out of range or asymmetric"
                    )));
                }
            }
        }
        Ok(SimilarityMatrix { labels, values })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.labels.len() + j]
    }

    /// `d = 1 - S`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        1.0 - self.get(i, j)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.labels.len().max(1))
    }
}

/// Jaccard similarity of two sets given as sorted, deduplicated slices.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Pairwise Jaccard similarity of the cities' trend sets. Cities that never
/// listed a trend are left out with a warning.
pub fn jaccard_matrix(table: &TrendEpisodeTable) -> Result<SimilarityMatrix> {
    let catalog = table.catalog();
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); catalog.len()];
    for row in table.city_rows_iter() {
        sets[row.location].push(row.trend);
    }
    let mut labels = Vec::new();
    let mut kept = Vec::new();
    for c in catalog.cities() {
        if sets[c].is_empty() {
            warn!(
                "location `{}` has no trends; excluded from similarity matrix",
                catalog.get(c).id
            );
            continue;
        }
        sets[c].sort_unstable();
        labels.push(catalog.get(c).id.clone());
        kept.push(std::mem::take(&mut sets[c]));
    }
    if kept.is_empty() {
        return Err(Error::InsufficientData("no location has any trend".into()));
    }
    let n = kept.len();
    let values: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i == j {
                1.0
            } else {
                jaccard(&kept[i.min(j)], &kept[i.max(j)])
            }
        })
        .collect();
    Ok(SimilarityMatrix { labels, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_cases() {
        assert_eq!(jaccard(&[1, 2, 3], &[1, 2, 3]), 1.0);
        assert_eq!(jaccard(&[1, 2], &[3, 4]), 0.0);
        // {a,b,c} vs {b,c,d}: |∩| = 2, |∪| = 4
        assert_eq!(jaccard(&[0, 1, 2], &[1, 2, 3]), 0.5);
    }

    #[test]
    fn matrix_validation() {
        let labels = vec!["a".to_string(), "b".to_string()];
        assert!(SimilarityMatrix::new(labels.clone(), vec![1.0, 0.3, 0.3, 1.0]).is_ok());
        assert!(SimilarityMatrix::new(labels.clone(), vec![1.0, 0.3, 0.2, 1.0]).is_err());
        assert!(SimilarityMatrix::new(labels.clone(), vec![0.9, 0.3, 0.3, 1.0]).is_err());
        assert!(SimilarityMatrix::new(labels, vec![1.0, 1.3, 1.3, 1.0]).is_err());
    }
}
