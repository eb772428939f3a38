//! Sequential minimal optimization for the soft-margin dual
//!
//! ```text
//!   max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//!   s.t. 0 <= a_i <= C,  sum_i y_i a_i = 0
//! ```
//!
//! Working pairs use second-order selection: `i` is the maximal violator in
//! the "up" set, `j` the partner in the "low" set with the largest
//! guaranteed decrease of the objective. The solver stops when the
//! maximal violation `m(a) - M(a)` drops below `kkt_tol`.

use super::{Kernel, SvmModel, TrainConfig, MODEL_VERSION};
use crate::{Error, Result};

const TAU: f64 = 1e-12;

/// A trained model with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: SvmModel,
    pub converged: bool,
    pub iterations: usize,
    /// Final maximal KKT violation `m(a) - M(a)`.
    pub violation: f64,
    /// Dual objective at the returned multipliers.
    pub objective: f64,
    /// Multiplier of every training example, zeros included.
    pub alphas: Vec<f64>,
}

/// Dual objective `sum a - 1/2 a^T Q a` for arbitrary multipliers.
pub fn dual_objective<S: AsRef<[f64]>>(kernel: &Kernel, points: &[S], labels: &[i8], alphas: &[f64]) -> f64 {
    let n = points.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alphas[j] == 0.0 {
                continue;
            }
            let k = kernel.eval_unchecked(points[i].as_ref(), points[j].as_ref());
            quad += alphas[i] * alphas[j] * (labels[i] * labels[j]) as f64 * k;
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

pub fn train<S: AsRef<[f64]>>(points: &[S], labels: &[i8], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = points.len();
    if labels.len() != n {
        return Err(Error::shape(n, labels.len()));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::Training("labels must be +1 or -1".into()));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::Training("training data must contain both classes".into()));
    }
    let dim = points[0].as_ref().len();
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != dim) {
        return Err(Error::shape(dim, p.as_ref().len()));
    }

    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let kernel = cfg.kernel;
    // Dense Q_ij = y_i y_j K_ij; training sets here are small.
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = y[i] * y[j] * kernel.eval_unchecked(points[i].as_ref(), points[j].as_ref());
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let c = cfg.c_reg;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = cfg.max_passes.saturating_mul(n.max(1));

    let mut iterations = 0;
    let mut converged = false;
    let mut violation;
    loop {
        let (pair, gap) = select_pair(&q, &y, &alpha, &grad, c);
        violation = gap;
        if gap < cfg.kkt_tol {
            converged = true;
            break;
        }
        let Some((i, j)) = pair else {
            converged = true;
            break;
        };
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        update_pair(&q, &y, &mut alpha, &mut grad, c, i, j, n);
    }

    let bias = bias_from(&y, &alpha, &grad, c);
    let objective = -(0..n).map(|i| 0.5 * alpha[i] * (grad[i] - 1.0) ).sum::<f64>();

    let mut model = SvmModel {
        version: MODEL_VERSION.into(),
        kernel,
        c_reg: c,
        bias,
        support_vectors: Vec::new(),
        alphas: Vec::new(),
        labels: Vec::new(),
    };
    for i in (0..n).filter(|&i| alpha[i] > 0.0) {
        model.support_vectors.push(points[i].as_ref().to_vec());
        model.alphas.push(alpha[i]);
        model.labels.push(labels[i]);
    }
    Ok(TrainOutcome {
        model,
        converged,
        iterations,
        violation,
        objective,
        alphas: alpha,
    })
}

#[inline]
fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

#[inline]
fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y < 0.0 && a < c) || (y > 0.0 && a > 0.0)
}

/// Returns the working pair (if any) and the current violation `m - M`.
fn select_pair(q: &[f64], y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> (Option<(usize, usize)>, f64) {
    let n = y.len();
    let mut i_best: Option<usize> = None;
    let mut m_up = f64::NEG_INFINITY;
    for t in 0..n {
        if in_up(y[t], alpha[t], c) {
            let v = -y[t] * grad[t];
            if v > m_up {
                m_up = v;
                i_best = Some(t);
            }
        }
    }
    let Some(i) = i_best else {
        return (None, 0.0);
    };
    let qii = q[i * n + i];
    let mut m_low = f64::INFINITY;
    let mut j_best: Option<usize> = None;
    let mut best_obj = f64::INFINITY;
    for t in 0..n {
        if !in_low(y[t], alpha[t], c) {
            continue;
        }
        let v = -y[t] * grad[t];
        m_low = m_low.min(v);
        let b = m_up - v;
        if b > 0.0 {
            // a = K_ii + K_tt - 2 K_it, with K_it = y_i y_t Q_it.
            let mut a = qii + q[t * n + t] - 2.0 * y[i] * y[t] * q[i * n + t];
            if a <= 0.0 {
                a = TAU;
            }
            let obj = -(b * b) / a;
            if obj < best_obj {
                best_obj = obj;
                j_best = Some(t);
            }
        }
    }
    if !m_low.is_finite() {
        return (None, 0.0);
    }
    (j_best.map(|j| (i, j)), m_up - m_low)
}

#[allow(clippy::too_many_arguments)]
fn update_pair(q: &[f64], y: &[f64], alpha: &mut [f64], grad: &mut [f64], c: f64, i: usize, j: usize, n: usize) {
    let (old_i, old_j) = (alpha[i], alpha[j]);
    let qij = q[i * n + j];
    let (qii, qjj) = (q[i * n + i], q[j * n + j]);
    if y[i] != y[j] {
        let mut quad = qii + qjj + 2.0 * qij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = alpha[i] - alpha[j];
        alpha[i] += delta;
        alpha[j] += delta;
        if diff > 0.0 {
            if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = -diff;
        }
        if diff > 0.0 {
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = c - diff;
            }
        } else if alpha[j] > c {
            alpha[j] = c;
            alpha[i] = c + diff;
        }
    } else {
        let mut quad = qii + qjj - 2.0 * qij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (grad[i] - grad[j]) / quad;
        let sum = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if sum > c {
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = sum - c;
            }
        } else if alpha[j] < 0.0 {
            alpha[j] = 0.0;
            alpha[i] = sum;
        }
        if sum > c {
            if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = sum - c;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = sum;
        }
    }
    let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
    let (row_i, row_j) = (&q[i * n..(i + 1) * n], &q[j * n..(j + 1) * n]);
    for k in 0..n {
        grad[k] += row_i[k] * di + row_j[k] * dj;
    }
}

/// `b` averaged over free multipliers, else the midpoint of the feasible
/// interval.
fn bias_from(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut sum = 0.0;
    let mut free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += yg;
            free += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    -rho
}
