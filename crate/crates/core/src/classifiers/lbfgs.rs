//! Limited-memory BFGS with a backtracking Armijo line search.

use std::collections::VecDeque;

pub struct Outcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimizes `f`, which returns the objective and writes the gradient.
/// Stops once the largest gradient component is at most `gtol`.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, max_iter: usize, gtol: f64) -> Outcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    const MEMORY: usize = 10;
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut value = f(&x, &mut g);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut alpha = vec![0.0; MEMORY];
    for it in 0..max_iter {
        if max_abs(&g) <= gtol {
            return Outcome {
                x,
                iterations: it,
                converged: true,
            };
        }
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        for (j, (s, y, rho)) in history.iter().enumerate().rev() {
            alpha[j] = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= alpha[j] * yi;
            }
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / dot(&g, &g).sqrt().max(1e-300),
        };
        for di in &mut d {
            *di *= gamma;
        }
        for (j, (s, y, rho)) in history.iter().enumerate() {
            let beta = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (alpha[j] - beta) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                xn[i] = x[i] + step * d[i];
            }
            let vn = f(&xn, &mut gn);
            if vn.is_finite() && vn <= value + 1e-4 * step * slope {
                value = vn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Outcome {
                x,
                iterations: it,
                converged: max_abs(&g) <= gtol,
            };
        }
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
    }
    let converged = max_abs(&g) <= gtol;
    Outcome {
        x,
        iterations: max_iter,
        converged,
    }
}
