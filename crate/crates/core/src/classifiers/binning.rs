//! Quantile binning of feature columns for histogram tree growth.

use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;

/// Per-feature ascending cut points. A value `x` falls in bin `b`, the
/// number of cuts strictly below `x`, so `bin(x) <= b` iff `x <= cuts[b]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BinMapper {
    pub cuts: Vec<Vec<f64>>,
}

impl BinMapper {
    pub fn fit(x: &FeatureMatrix, max_bins: usize) -> BinMapper {
        let max_bins = max_bins.clamp(2, 256);
        let n = x.len();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); x.dim];
        for row in &x.rows {
            for (f, v) in row.iter() {
                columns[f].push(v);
            }
        }
        let cuts = columns
            .into_iter()
            .map(|mut col| {
                let zeros = n - col.len();
                col.extend(std::iter::repeat(0.0).take(zeros));
                column_cuts(col, max_bins)
            })
            .collect();
        BinMapper { cuts }
    }

    pub fn bin(&self, feature: usize, x: f64) -> u8 {
        self.cuts[feature].partition_point(|&c| c < x) as u8
    }

    pub fn threshold(&self, feature: usize, bin: u8) -> f64 {
        self.cuts[feature][bin as usize]
    }
}

fn column_cuts(mut col: Vec<f64>, max_bins: usize) -> Vec<f64> {
    col.sort_unstable_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in col.iter().copied() {
        match distinct.last_mut() {
            Some((d, c)) if *d == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    let mid = |i: usize| (distinct[i].0 + distinct[i + 1].0) / 2.0;
    if distinct.len() <= max_bins {
        return (0..distinct.len().saturating_sub(1)).map(mid).collect();
    }
    let n = col.len() as f64;
    let mut cuts = Vec::with_capacity(max_bins - 1);
    let mut seen = 0usize;
    let mut next = 1usize;
    for i in 0..distinct.len() - 1 {
        seen += distinct[i].1;
        if seen as f64 >= next as f64 * n / max_bins as f64 {
            cuts.push(mid(i));
            while next as f64 * n / max_bins as f64 <= seen as f64 {
                next += 1;
            }
            if cuts.len() == max_bins - 1 {
                break;
            }
        }
    }
    cuts
}

/// Set of touched bins, iterated in ascending order.
#[derive(Clone, Copy, Default)]
pub(crate) struct BinSet([u64; 4]);

impl BinSet {
    pub fn insert(&mut self, b: u8) {
        self.0[(b >> 6) as usize] |= 1 << (b & 63);
    }

    pub fn len(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    pub fn clear(&mut self) {
        self.0 = [0; 4];
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..4).flat_map(move |w| {
            let mut word = self.0[w];
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let t = word.trailing_zeros();
                word &= word - 1;
                Some((w as u32 * 64 + t) as u8)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn few_values_get_own_bins() {
        let x = FeatureMatrix::from_dense(&[vec![0.0], vec![1.0], vec![3.0], vec![1.0]]).unwrap();
        let m = BinMapper::fit(&x, 256);
        assert_eq!(m.cuts[0], vec![0.5, 2.0]);
        assert_eq!(m.bin(0, 0.0), 0);
        assert_eq!(m.bin(0, 1.0), 1);
        assert_eq!(m.bin(0, 2.0), 1);
        assert_eq!(m.bin(0, 9.0), 2);
    }

    #[test]
    fn many_values_are_capped() {
        let rows: Vec<Vec<f64>> = (0..5000).map(|i| vec![(i % 1000) as f64]).collect();
        let x = FeatureMatrix::from_dense(&rows).unwrap();
        let m = BinMapper::fit(&x, 256);
        assert!(m.cuts[0].len() <= 255 && m.cuts[0].len() > 200);
        assert!(m.cuts[0].windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn binset_order() {
        let mut s = BinSet::default();
        for b in [200u8, 3, 64, 63, 255] {
            s.insert(b);
        }
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![3, 63, 64, 200, 255]);
        assert_eq!(s.len(), 5);
    }
}
