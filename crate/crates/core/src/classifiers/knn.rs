use serde::{Deserialize, Serialize};

use super::{Encoded, KnnParams};
use crate::features::FeatureVector;

/// Stored training vectors; Euclidean distance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub rows: Vec<FeatureVector>,
    pub y: Vec<usize>,
}

/// Squared Euclidean distance between two sparse vectors.
fn sq_dist(a: &FeatureVector, b: &FeatureVector) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.indices.len() && j < b.indices.len() {
        let d = match a.indices[i].cmp(&b.indices[j]) {
            std::cmp::Ordering::Less => {
                i += 1;
                a.values[i - 1]
            }
            std::cmp::Ordering::Greater => {
                j += 1;
                b.values[j - 1]
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
                a.values[i - 1] - b.values[j - 1]
            }
        };
        s += d * d;
    }
    s += a.values[i..].iter().map(|v| v * v).sum::<f64>();
    s += b.values[j..].iter().map(|v| v * v).sum::<f64>();
    s
}

impl Knn {
    pub(super) fn fit(p: &KnnParams, data: &Encoded) -> Knn {
        Knn {
            k: p.k,
            rows: data.x.rows.clone(),
            y: data.y.clone(),
        }
    }

    /// Majority vote of the `k` nearest rows (distance ties go to the
    /// earlier training row); vote ties go to the smallest class index.
    pub fn predict(&self, x: &FeatureVector, n_classes: usize) -> usize {
        let mut dist: Vec<(f64, usize)> = self.rows.iter().enumerate().map(|(i, r)| (sq_dist(x, r), i)).collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let mut votes = vec![0usize; n_classes];
        for &(_, i) in &dist[..k] {
            votes[self.y[i]] += 1;
        }
        let mut best = 0;
        for c in 1..n_classes {
            if votes[c] > votes[best] {
                best = c;
            }
        }
        best
    }
}
