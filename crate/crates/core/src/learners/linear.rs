//! L2-regularized logistic regression and linear SVC on standardized inputs.

use serde::{Deserialize, Serialize};

use super::matrix::{Matrix, Standardizer};

pub const MAX_ITER: usize = 5000;
pub const GRAD_TOL: f64 = 1e-6;
// stop the subgradient method once the best objective has not moved for this long
const SVC_PATIENCE: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub standardizer: Standardizer,
    /// Weights on the standardized scale.
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn margin(&self, row: &[f64], buf: &mut Vec<f64>) -> f64 {
        self.standardizer.transform_row(row, buf);
        self.bias + dot(&self.weights, buf)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// log(1 + e^z) without overflow
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Objective value and gradient of a linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub grad_w: Vec<f64>,
    pub grad_b: f64,
}

impl Objective {
    fn inf_norm(&self) -> f64 {
        self.grad_w.iter().fold(self.grad_b.abs(), |m, g| m.max(g.abs()))
    }

    fn sq_norm(&self) -> f64 {
        self.grad_w.iter().map(|g| g * g).sum::<f64>() + self.grad_b * self.grad_b
    }
}

/// Mean negative log-likelihood plus `lambda/2 ‖w‖²` over row-major `z`
/// with `d` columns and labels in {0, 1}.
pub fn logistic_objective(z: &[f64], d: usize, y: &[f64], lambda: f64, w: &[f64], b: f64) -> Objective {
    let n = y.len() as f64;
    let mut value = 0.0;
    let mut grad_w = vec![0.0; d];
    let mut grad_b = 0.0;
    for (row, &yi) in z.chunks_exact(d.max(1)).zip(y) {
        let m = b + dot(w, row);
        value += softplus(m) - yi * m;
        let r = sigmoid(m) - yi;
        grad_b += r;
        for (g, x) in grad_w.iter_mut().zip(row) {
            *g += r * x;
        }
    }
    value /= n;
    grad_b /= n;
    for (g, wi) in grad_w.iter_mut().zip(w) {
        *g = *g / n + lambda * wi;
    }
    value += 0.5 * lambda * dot(w, w);
    Objective { value, grad_w, grad_b }
}

/// Mean hinge loss plus `lambda/2 ‖w‖²` and one subgradient; labels in {0, 1}.
pub fn hinge_objective(z: &[f64], d: usize, y: &[f64], lambda: f64, w: &[f64], b: f64) -> Objective {
    let n = y.len() as f64;
    let mut value = 0.0;
    let mut grad_w = vec![0.0; d];
    let mut grad_b = 0.0;
    for (row, &yi) in z.chunks_exact(d.max(1)).zip(y) {
        let s = if yi > 0.5 { 1.0 } else { -1.0 };
        let slack = 1.0 - s * (b + dot(w, row));
        if slack > 0.0 {
            value += slack;
            grad_b -= s;
            for (g, x) in grad_w.iter_mut().zip(row) {
                *g -= s * x;
            }
        }
    }
    value /= n;
    grad_b /= n;
    for (g, wi) in grad_w.iter_mut().zip(w) {
        *g = *g / n + lambda * wi;
    }
    value += 0.5 * lambda * dot(w, w);
    Objective { value, grad_w, grad_b }
}

/// Fitted model and, when the iteration cap was hit, the iteration count.
pub(crate) fn fit_logistic(x: &Matrix, y: &[f64], lambda: f64) -> (LinearModel, Option<usize>) {
    let standardizer = Standardizer::fit(x);
    let z = standardizer.transform(x);
    let d = x.cols();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut obj = logistic_objective(&z, d, y, lambda, &w, b);
    let mut eta = 1.0;
    let mut stalled = false;
    let mut iterations = 0;
    while iterations < MAX_ITER && obj.inf_norm() >= GRAD_TOL && !stalled {
        iterations += 1;
        let g2 = obj.sq_norm();
        loop {
            let w_new: Vec<f64> = w.iter().zip(&obj.grad_w).map(|(wi, g)| wi - eta * g).collect();
            let b_new = b - eta * obj.grad_b;
            let cand = logistic_objective(&z, d, y, lambda, &w_new, b_new);
            if cand.value <= obj.value - 0.5 * eta * g2 {
                w = w_new;
                b = b_new;
                obj = cand;
                break;
            }
            eta *= 0.5;
            if eta < 1e-16 {
                stalled = true;
                break;
            }
        }
    }
    let nonconv = (obj.inf_norm() >= GRAD_TOL && !stalled).then_some(iterations);
    (
        LinearModel {
            standardizer,
            weights: w,
            bias: b,
        },
        nonconv,
    )
}

pub(crate) fn fit_svc(x: &Matrix, y: &[f64], c: f64) -> (LinearModel, Option<usize>) {
    let standardizer = Standardizer::fit(x);
    let z = standardizer.transform(x);
    let d = x.cols();
    let lambda = 1.0 / (c * y.len() as f64);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut best = (f64::INFINITY, w.clone(), b);
    let mut last_improved = 0;
    let mut capped = true;
    for t in 1..=MAX_ITER {
        let obj = hinge_objective(&z, d, y, lambda, &w, b);
        if best.0.is_infinite() || obj.value < best.0 - 1e-12 * best.0.abs().max(1.0) {
            best = (obj.value, w.clone(), b);
            last_improved = t;
        } else if t - last_improved > SVC_PATIENCE {
            capped = false;
            break;
        }
        let eta = 1.0 / (t as f64).sqrt();
        for (wi, g) in w.iter_mut().zip(&obj.grad_w) {
            *wi -= eta * g;
        }
        b -= eta * obj.grad_b;
    }
    (
        LinearModel {
            standardizer,
            weights: best.1,
            bias: best.2,
        },
        capped.then_some(MAX_ITER),
    )
}
