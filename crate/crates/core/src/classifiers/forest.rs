use rand::Rng;
use serde::{Deserialize, Serialize};

use super::binning::{BinMapper, BinSet};
use super::{argmax, unit_rng, Encoded, ForestParams};
use crate::features::FeatureVector;

const LEAF: u32 = u32::MAX;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Node {
    pub feature: u32,
    pub threshold: f64,
    /// Left child, or the offset of the class distribution for a leaf.
    pub left: u32,
    pub right: u32,
}

/// Classification tree; each leaf holds a class distribution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    pub leaf_values: Vec<f32>,
}

impl Tree {
    fn leaf<'a>(&'a self, x: &FeatureVector, n_classes: usize) -> &'a [f32] {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if node.feature == LEAF {
                let o = node.left as usize;
                return &self.leaf_values[o..o + n_classes];
            }
            i = if x.get(node.feature as usize) <= node.threshold {
                node.left
            } else {
                node.right
            } as usize;
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            let n = &t.nodes[i];
            if n.feature == LEAF {
                0
            } else {
                1 + go(t, n.left as usize).max(go(t, n.right as usize))
            }
        }
        go(self, 0)
    }
}

/// Bagged Gini trees; predicts the class with the highest mean leaf
/// probability.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Forest {
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

struct Grower<'a> {
    bins: &'a [u8],
    n: usize,
    d: usize,
    y: &'a [usize],
    k: usize,
    mapper: &'a BinMapper,
    mtry: usize,
    min_split: usize,
    max_depth: usize,
    hist: Vec<f64>,
    touched: BinSet,
    perm: Vec<usize>,
}

impl Forest {
    pub(super) fn fit(p: &ForestParams, data: &Encoded, seed: u64) -> Forest {
        let (n, d, k) = (data.x.len(), data.x.dim, data.n_classes());
        let mapper = BinMapper::fit(data.x, p.max_bins);
        let mut bins = vec![0u8; n * d];
        for f in 0..d {
            let z = mapper.bin(f, 0.0);
            bins[f * n..(f + 1) * n].fill(z);
        }
        for (i, row) in data.x.rows.iter().enumerate() {
            for (f, v) in row.iter() {
                bins[f * n + i] = mapper.bin(f, v);
            }
        }
        let mtry = p.max_features.unwrap_or((d as f64).sqrt() as usize).clamp(1, d.max(1));
        let mut g = Grower {
            bins: &bins,
            n,
            d,
            y: &data.y,
            k,
            mapper: &mapper,
            mtry,
            min_split: p.min_samples_split.max(2),
            max_depth: p.max_depth.unwrap_or(usize::MAX),
            hist: vec![0.0; 256 * k],
            touched: BinSet::default(),
            perm: (0..d).collect(),
        };
        let trees = (0..p.trees)
            .map(|t| {
                let mut rng = unit_rng(seed, t as u64);
                let mut weight = vec![0u32; n];
                for _ in 0..n {
                    weight[rng.gen_range(0..n)] += 1;
                }
                g.grow(&weight, &mut rng)
            })
            .collect();
        Forest { n_classes: k, trees }
    }

    pub fn predict(&self, x: &FeatureVector) -> usize {
        let mut acc = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (a, &v) in acc.iter_mut().zip(t.leaf(x, self.n_classes)) {
                *a += v as f64;
            }
        }
        argmax(&acc)
    }
}

impl Grower<'_> {
    fn grow(&mut self, weight: &[u32], rng: &mut impl Rng) -> Tree {
        let mut idx: Vec<u32> = (0..self.n as u32).filter(|&i| weight[i as usize] > 0).collect();
        let mut tree = Tree {
            nodes: vec![Node {
                feature: LEAF,
                threshold: 0.0,
                left: 0,
                right: 0,
            }],
            leaf_values: Vec::new(),
        };
        let mut stack = vec![(0usize, 0usize, idx.len(), 0usize)];
        let mut totals = vec![0.0; self.k];
        while let Some((node, lo, hi, depth)) = stack.pop() {
            totals.fill(0.0);
            for &i in &idx[lo..hi] {
                totals[self.y[i as usize]] += weight[i as usize] as f64;
            }
            let pure = totals.iter().filter(|&&c| c > 0.0).count() <= 1;
            let split = if pure || hi - lo < self.min_split || depth >= self.max_depth {
                None
            } else {
                self.best_split(&idx[lo..hi], weight, &totals, rng)
            };
            let Some((f, b)) = split else {
                let w: f64 = totals.iter().sum();
                tree.nodes[node].left = tree.leaf_values.len() as u32;
                tree.leaf_values.extend(totals.iter().map(|&c| (c / w) as f32));
                continue;
            };
            let col = &self.bins[f * self.n..(f + 1) * self.n];
            let mut mid = lo;
            for j in lo..hi {
                if col[idx[j] as usize] <= b {
                    idx.swap(j, mid);
                    mid += 1;
                }
            }
            let left = tree.nodes.len();
            for _ in 0..2 {
                tree.nodes.push(Node {
                    feature: LEAF,
                    threshold: 0.0,
                    left: 0,
                    right: 0,
                });
            }
            tree.nodes[node] = Node {
                feature: f as u32,
                threshold: self.mapper.threshold(f, b),
                left: left as u32,
                right: left as u32 + 1,
            };
            stack.push((left + 1, mid, hi, depth + 1));
            stack.push((left, lo, mid, depth + 1));
        }
        tree
    }

    /// Best Gini split over random features until `mtry` non-constant
    /// ones have been examined.
    fn best_split(&mut self, rows: &[u32], weight: &[u32], totals: &[f64], rng: &mut impl Rng) -> Option<(usize, u8)> {
        let k = self.k;
        let mut best: Option<(f64, usize, u8)> = None;
        let mut left = vec![0.0; k];
        let mut examined = 0;
        for j in 0..self.d {
            if examined == self.mtry {
                break;
            }
            let r = rng.gen_range(j..self.d);
            self.perm.swap(j, r);
            let f = self.perm[j];
            let col = &self.bins[f * self.n..(f + 1) * self.n];
            self.touched.clear();
            for &i in rows {
                let b = col[i as usize];
                self.touched.insert(b);
                self.hist[b as usize * k + self.y[i as usize]] += weight[i as usize] as f64;
            }
            let touched = self.touched;
            if touched.len() >= 2 {
                examined += 1;
                left.fill(0.0);
                let mut wl = 0.0;
                let wt: f64 = totals.iter().sum();
                let last = touched.iter().last().unwrap();
                for b in touched.iter() {
                    if b == last {
                        break;
                    }
                    for c in 0..k {
                        let h = self.hist[b as usize * k + c];
                        left[c] += h;
                        wl += h;
                    }
                    let wr = wt - wl;
                    let mut score = 0.0;
                    for c in 0..k {
                        let r = totals[c] - left[c];
                        score += left[c] * left[c] / wl + r * r / wr;
                    }
                    if best.map_or(true, |(s, _, _)| score > s) {
                        best = Some((score, f, b));
                    }
                }
            }
            for b in touched.iter() {
                self.hist[b as usize * k..(b as usize + 1) * k].fill(0.0);
            }
        }
        best.map(|(_, f, b)| (f, b))
    }
}
