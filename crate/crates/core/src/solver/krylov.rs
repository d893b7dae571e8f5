//! Matrix-free GMRES and Anderson mixing on flat real vectors.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Unrestarted GMRES from a zero initial guess.
///
/// Stops once `||b - A x|| <= tol ||b||` or after `max_iter` Arnoldi steps.
pub fn gmres<F>(mut apply: F, b: &[f64], tol: f64, max_iter: usize) -> GmresOutcome
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let beta = norm(b);
    if beta == 0.0 {
        return GmresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }

    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / beta).collect()];
    // Hessenberg columns after Givens rotation (upper triangular part).
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut rel = 1.0;

    for k in 0..max_iter.min(n) {
        let mut w = apply(&basis[k]);
        let mut h = vec![0.0; k + 2];
        // modified Gram-Schmidt, twice for stability
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c = dot(&w, v);
                h[i] += c;
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let hn = norm(&w);
        h[k + 1] = hn;

        for i in 0..k {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let denom = h[k].hypot(h[k + 1]);
        let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[k] / denom, h[k + 1] / denom) };
        cs.push(c);
        sn.push(s);
        h[k] = denom;
        h[k + 1] = 0.0;
        g.push(-s * g[k]);
        g[k] *= c;
        r_cols.push(h);

        rel = g[k + 1].abs() / beta;
        let breakdown = hn <= 1e-14 * beta;
        if rel <= tol || breakdown || k + 1 == max_iter.min(n) {
            let x = back_substitute(&r_cols, &g, &basis);
            return GmresOutcome {
                x,
                iterations: k + 1,
                rel_residual: rel,
                converged: rel <= tol || breakdown,
            };
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }

    GmresOutcome {
        x: vec![0.0; n],
        iterations: 0,
        rel_residual: rel,
        converged: false,
    }
}

fn back_substitute(r_cols: &[Vec<f64>], g: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let k = r_cols.len();
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in i + 1..k {
            acc -= r_cols[j][i] * y[j];
        }
        y[i] = if r_cols[i][i] != 0.0 { acc / r_cols[i][i] } else { 0.0 };
    }
    let mut x = vec![0.0; basis[0].len()];
    for (yi, v) in y.iter().zip(basis) {
        x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += yi * vi);
    }
    x
}

/// Anderson mixing for `x = g(x)` with a bounded history.
#[derive(Debug, Clone)]
pub struct Anderson {
    depth: usize,
    history: VecDeque<(Vec<f64>, Vec<f64>)>,
}

impl Anderson {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            history: VecDeque::with_capacity(depth + 1),
        }
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }

    /// Next iterate from the current `x` and its image `g = g(x)`.
    pub fn step(&mut self, x: &[f64], g: &[f64]) -> Vec<f64> {
        if self.depth == 0 {
            return g.to_vec();
        }
        let f: Vec<f64> = g.iter().zip(x).map(|(a, b)| a - b).collect();
        self.history.push_back((x.to_vec(), f.clone()));
        if self.history.len() > self.depth + 1 {
            self.history.pop_front();
        }
        let cols = self.history.len() - 1;
        if cols == 0 {
            return g.to_vec();
        }

        let n = x.len();
        let mut df = DMatrix::<f64>::zeros(n, cols);
        let mut dx = DMatrix::<f64>::zeros(n, cols);
        for c in 0..cols {
            let (x0, f0) = &self.history[c];
            let (x1, f1) = &self.history[c + 1];
            for i in 0..n {
                df[(i, c)] = f1[i] - f0[i];
                dx[(i, c)] = x1[i] - x0[i];
            }
        }
        let rhs = DVector::from_column_slice(&f);
        let svd = df.clone().svd(true, true);
        let eps = 1e-12 * svd.singular_values.max();
        let gamma = match svd.solve(&rhs, eps) {
            Ok(v) => v,
            Err(_) => {
                self.reset();
                return g.to_vec();
            }
        };
        let correction = (dx + df) * gamma;
        let out: Vec<f64> = g.iter().zip(correction.iter()).map(|(a, c)| a - c).collect();
        if out.iter().all(|v| v.is_finite()) {
            out
        } else {
            self.reset();
            g.to_vec()
        }
    }
}
