use serde::{Deserialize, Serialize};

use super::binning::{BinMapper, BinSet};
use super::{argmax, Encoded, GboostParams};
use crate::features::FeatureVector;

const LEAF: u32 = u32::MAX;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegNode {
    pub feature: u32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    /// Leaf output, already scaled by the learning rate.
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    pub fn eval(&self, x: &FeatureVector) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.feature == LEAF {
                return n.value;
            }
            i = if x.get(n.feature as usize) <= n.threshold { n.left } else { n.right } as usize;
        }
    }
}

/// Softmax gradient boosting: one regression tree per class and round,
/// second-order split gain, histogram split finding.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Booster {
    pub n_classes: usize,
    /// Round-major: tree `r * n_classes + c` adds to class `c`.
    pub trees: Vec<RegTree>,
}

struct Binned {
    /// Per row, `(feature, bin)` for every stored nonzero.
    rows: Vec<Vec<(u32, u8)>>,
    zero_bin: Vec<u8>,
}

struct Builder<'a> {
    data: &'a Binned,
    mapper: &'a BinMapper,
    p: &'a GboostParams,
    /// `(g, h)` per feature and bin.
    hist: Vec<(f64, f64)>,
    touched: Vec<BinSet>,
    feat_sum: Vec<(f64, f64)>,
    feats: Vec<u32>,
    in_feat: Vec<bool>,
}

impl Booster {
    pub(super) fn fit(p: &GboostParams, data: &Encoded) -> Booster {
        let (n, d, k) = (data.x.len(), data.x.dim, data.n_classes());
        let mapper = BinMapper::fit(data.x, p.max_bins);
        let binned = Binned {
            rows: data
                .x
                .rows
                .iter()
                .map(|r| r.iter().map(|(f, v)| (f as u32, mapper.bin(f, v))).collect())
                .collect(),
            zero_bin: (0..d).map(|f| mapper.bin(f, 0.0)).collect(),
        };
        let mut b = Builder {
            data: &binned,
            mapper: &mapper,
            p,
            hist: vec![(0.0, 0.0); d * 256],
            touched: vec![BinSet::default(); d],
            feat_sum: vec![(0.0, 0.0); d],
            feats: Vec::new(),
            in_feat: vec![false; d],
        };
        let mut margin = vec![0.0; n * k];
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        let mut prob = vec![0.0; n * k];
        let mut trees = Vec::with_capacity(p.estimators * k);
        for _ in 0..p.estimators {
            for i in 0..n {
                let m = &margin[i * k..(i + 1) * k];
                let mx = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = m.iter().map(|v| (v - mx).exp()).sum();
                for c in 0..k {
                    prob[i * k + c] = (m[c] - mx).exp() / s;
                }
            }
            for c in 0..k {
                for i in 0..n {
                    let pr = prob[i * k + c];
                    grad[i] = pr - if data.y[i] == c { 1.0 } else { 0.0 };
                    hess[i] = (2.0 * pr * (1.0 - pr)).max(1e-16);
                }
                let (tree, leaf_of) = b.build(&grad, &hess);
                for (i, &leaf) in leaf_of.iter().enumerate() {
                    margin[i * k + c] += tree.nodes[leaf as usize].value;
                }
                trees.push(tree);
            }
        }
        Booster { n_classes: k, trees }
    }

    pub fn margins(&self, x: &FeatureVector) -> Vec<f64> {
        let mut m = vec![0.0; self.n_classes];
        for (t, tree) in self.trees.iter().enumerate() {
            m[t % self.n_classes] += tree.eval(x);
        }
        m
    }

    pub fn predict(&self, x: &FeatureVector) -> usize {
        argmax(&self.margins(x))
    }
}

impl Builder<'_> {
    fn row_bin(&self, row: usize, f: u32) -> u8 {
        let r = &self.data.rows[row];
        match r.binary_search_by_key(&f, |e| e.0) {
            Ok(p) => r[p].1,
            Err(_) => self.data.zero_bin[f as usize],
        }
    }

    /// Grows one depth-limited tree. Returns it with the leaf reached by
    /// every training row.
    fn build(&mut self, grad: &[f64], hess: &[f64]) -> (RegTree, Vec<u32>) {
        let n = grad.len();
        let lambda = self.p.lambda;
        let mut idx: Vec<u32> = (0..n as u32).collect();
        let mut leaf_of = vec![0u32; n];
        let mut nodes = vec![RegNode {
            feature: LEAF,
            threshold: 0.0,
            left: 0,
            right: 0,
            value: 0.0,
        }];
        let mut stack = vec![(0usize, 0usize, n, 0usize)];
        while let Some((node, lo, hi, depth)) = stack.pop() {
            let rows = &idx[lo..hi];
            let g: f64 = rows.iter().map(|&i| grad[i as usize]).sum();
            let h: f64 = rows.iter().map(|&i| hess[i as usize]).sum();
            let split = if depth < self.p.max_depth && h >= 2.0 * self.p.min_child_weight {
                self.best_split(rows, grad, hess, g, h)
            } else {
                None
            };
            let Some((f, b)) = split else {
                nodes[node].value = -g / (h + lambda) * self.p.learning_rate;
                for &i in rows {
                    leaf_of[i as usize] = node as u32;
                }
                continue;
            };
            let mut mid = lo;
            for j in lo..hi {
                if self.row_bin(idx[j] as usize, f) <= b {
                    idx.swap(j, mid);
                    mid += 1;
                }
            }
            let left = nodes.len();
            for _ in 0..2 {
                nodes.push(RegNode {
                    feature: LEAF,
                    threshold: 0.0,
                    left: 0,
                    right: 0,
                    value: 0.0,
                });
            }
            nodes[node].feature = f;
            nodes[node].threshold = self.mapper.threshold(f as usize, b);
            nodes[node].left = left as u32;
            nodes[node].right = left as u32 + 1;
            stack.push((left + 1, mid, hi, depth + 1));
            stack.push((left, lo, mid, depth + 1));
        }
        (RegTree { nodes }, leaf_of)
    }

    fn best_split(&mut self, rows: &[u32], grad: &[f64], hess: &[f64], g: f64, h: f64) -> Option<(u32, u8)> {
        let (lambda, mcw) = (self.p.lambda, self.p.min_child_weight);
        for &i in rows {
            let (gi, hi) = (grad[i as usize], hess[i as usize]);
            for &(f, b) in &self.data.rows[i as usize] {
                let fu = f as usize;
                if !self.in_feat[fu] {
                    self.in_feat[fu] = true;
                    self.feats.push(f);
                }
                let e = &mut self.hist[fu * 256 + b as usize];
                e.0 += gi;
                e.1 += hi;
                self.touched[fu].insert(b);
                self.feat_sum[fu].0 += gi;
                self.feat_sum[fu].1 += hi;
            }
        }
        self.feats.sort_unstable();
        let parent = g * g / (h + lambda);
        let mut best: Option<(f64, u32, u8)> = None;
        for &f in &self.feats {
            let fu = f as usize;
            let (sg, sh) = self.feat_sum[fu];
            let z = self.data.zero_bin[fu];
            let e = &mut self.hist[fu * 256 + z as usize];
            e.0 += g - sg;
            e.1 += h - sh;
            if h - sh > 0.0 {
                self.touched[fu].insert(z);
            }
            let touched = self.touched[fu];
            let (mut gl, mut hl) = (0.0, 0.0);
            let last = touched.iter().last().unwrap();
            for b in touched.iter() {
                if b == last {
                    break;
                }
                let e = self.hist[fu * 256 + b as usize];
                gl += e.0;
                hl += e.1;
                let (gr, hr) = (g - gl, h - hl);
                if hl < mcw || hr < mcw {
                    continue;
                }
                let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
                if gain > 1e-6 && best.map_or(true, |(s, _, _)| gain > s) {
                    best = Some((gain, f, b));
                }
            }
            for b in touched.iter() {
                self.hist[fu * 256 + b as usize] = (0.0, 0.0);
            }
            self.hist[fu * 256 + z as usize] = (0.0, 0.0);
            self.touched[fu].clear();
            self.feat_sum[fu] = (0.0, 0.0);
            self.in_feat[fu] = false;
        }
        self.feats.clear();
        best.map(|(_, f, b)| (f, b))
    }
}
