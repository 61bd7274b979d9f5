use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{argmax, lbfgs, unit_rng, Encoded, LogregParams, SvmParams};
use crate::features::FeatureVector;

/// One weight row and intercept per class; predicts the highest score.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Linear {
    pub n_classes: usize,
    pub dim: usize,
    /// Row-major `n_classes x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Linear {
    pub fn scores(&self, x: &FeatureVector) -> Vec<f64> {
        (0..self.n_classes)
            .map(|k| {
                let w = &self.weights[k * self.dim..(k + 1) * self.dim];
                self.bias[k] + x.iter().map(|(j, v)| w[j] * v).sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, x: &FeatureVector) -> usize {
        argmax(&self.scores(x))
    }

    /// Multinomial logistic regression. Minimizes the mean cross-entropy
    /// plus `l2 / (2n) * |W|^2` with L-BFGS.
    pub(super) fn fit_logreg(p: &LogregParams, data: &Encoded) -> Linear {
        let (k, d, n) = (data.n_classes(), data.x.dim, data.x.len());
        let scale = 1.0 / n as f64;
        let objective = |theta: &[f64], grad: &mut [f64]| {
            let (w, b) = theta.split_at(k * d);
            grad.fill(0.0);
            let (gw, gb) = grad.split_at_mut(k * d);
            let mut loss = 0.0;
            let mut z = vec![0.0; k];
            for (row, &y) in data.x.rows.iter().zip(&data.y) {
                for c in 0..k {
                    let wc = &w[c * d..(c + 1) * d];
                    z[c] = b[c] + row.iter().map(|(j, v)| wc[j] * v).sum::<f64>();
                }
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = z.iter().map(|v| (v - m).exp()).sum();
                loss += m + sum.ln() - z[y];
                for c in 0..k {
                    let r = (z[c] - m).exp() / sum - if c == y { 1.0 } else { 0.0 };
                    gb[c] += r;
                    let g = &mut gw[c * d..(c + 1) * d];
                    for (j, v) in row.iter() {
                        g[j] += r * v;
                    }
                }
            }
            let mut penalty = 0.0;
            for (gi, wi) in gw.iter_mut().zip(w) {
                penalty += wi * wi;
                *gi = *gi * scale + p.l2 * scale * wi;
            }
            for gi in gb.iter_mut() {
                *gi *= scale;
            }
            loss * scale + 0.5 * p.l2 * scale * penalty
        };
        let out = lbfgs::minimize(objective, vec![0.0; k * d + k], p.max_iter, p.tol);
        let mut weights = out.x;
        let bias = weights.split_off(k * d);
        Linear {
            n_classes: k,
            dim: d,
            weights,
            bias,
            iterations: out.iterations,
            converged: out.converged,
        }
    }

    /// One-vs-rest L2-regularized hinge loss, solved in the dual by
    /// coordinate descent. The intercept is an extra constant feature.
    pub(super) fn fit_svm(p: &SvmParams, data: &Encoded, seed: u64) -> Linear {
        let (k, d, n) = (data.n_classes(), data.x.dim, data.x.len());
        let qii: Vec<f64> = data.x.rows.iter().map(|r| r.norm().powi(2) + 1.0).collect();
        let mut weights = vec![0.0; k * d];
        let mut bias = vec![0.0; k];
        let mut iterations = 0;
        let mut converged = true;
        for c in 0..k {
            let mut rng = unit_rng(seed, c as u64);
            let w = &mut weights[c * d..(c + 1) * d];
            let mut wb = 0.0;
            let mut alpha = vec![0.0; n];
            let mut order: Vec<usize> = (0..n).collect();
            let mut done = false;
            let mut epochs = 0;
            while epochs < p.max_iter {
                epochs += 1;
                order.shuffle(&mut rng);
                let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
                for &i in &order {
                    let row = &data.x.rows[i];
                    let yi = if data.y[i] == c { 1.0 } else { -1.0 };
                    let g = yi * (wb + row.iter().map(|(j, v)| w[j] * v).sum::<f64>()) - 1.0;
                    let pg = if alpha[i] == 0.0 {
                        g.min(0.0)
                    } else if alpha[i] == p.c {
                        g.max(0.0)
                    } else {
                        g
                    };
                    pg_max = pg_max.max(pg);
                    pg_min = pg_min.min(pg);
                    if pg.abs() > 1e-12 {
                        let old = alpha[i];
                        alpha[i] = (old - g / qii[i]).clamp(0.0, p.c);
                        let delta = (alpha[i] - old) * yi;
                        for (j, v) in row.iter() {
                            w[j] += delta * v;
                        }
                        wb += delta;
                    }
                }
                if pg_max - pg_min <= p.tol {
                    done = true;
                    break;
                }
            }
            bias[c] = wb;
            iterations = iterations.max(epochs);
            converged &= done;
        }
        Linear {
            n_classes: k,
            dim: d,
            weights,
            bias,
            iterations,
            converged,
        }
    }
}
