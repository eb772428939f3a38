//! Reduced-set pruning of linearly dependent support vectors.
//!
//! If `K(., m_k) = sum_{i != k} c_i K(., m_i)` then the term of `m_k` can be
//! folded into the others, `beta_i += c_i beta_k` with `beta = alpha * y`,
//! leaving the decision surface unchanged. Coefficients are constrained to
//! `sum c_i = 1` so the balance `sum alpha_i y_i = 0` survives the fold.

use nalgebra::{DMatrix, DVector};

use super::{SvmModel, TrainConfig};

/// Largest accepted bound on the decision-value shift of one fold, per unit
/// `sqrt(K(x, x))`.
const MAX_FOLD_SHIFT: f64 = 1e-7;

/// Largest neighbourhood tried before falling back to all kept vectors.
const MAX_LOCAL_FIT: usize = 8;

struct Fit {
    /// Coefficients aligned with the `others` slice.
    coeffs: Vec<f64>,
    /// `|r| / |G[rows, k]|` for the Gram-column residual `r`.
    relative: f64,
    /// Bound on the feature-space residual norm, `sqrt(|u . r|)`.
    feature_residual: f64,
}

/// Most near-exact pairs from the whole kept set tried per candidate.
const MAX_GLOBAL_PAIRS: usize = 64;

/// Index sets tried for folding `k`, sparsest first: singles and pairs among
/// the nearest `MAX_LOCAL_FIT`, then any pair whose span nearly reaches `k`,
/// then local triples, longer nearest prefixes and finally everything.
fn candidate_subsets(gram: &DMatrix<f64>, k: usize, sorted: &[usize], tol: f64) -> Vec<Vec<usize>> {
    let local = &sorted[..sorted.len().min(MAX_LOCAL_FIT)];
    let mut out: Vec<Vec<usize>> = local.iter().map(|&a| vec![a]).collect();
    for (i, &a) in local.iter().enumerate() {
        for &b in &local[i + 1..] {
            out.push(vec![a, b]);
        }
    }
    // Closed-form squared distance from phi_k to the line through phi_a and
    // phi_b. Only a prefilter, so the bound is loose enough to absorb the
    // cancellation error; the fit itself is checked later.
    let limit = tol * gram[(k, k)].abs();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &a) in sorted.iter().enumerate() {
        for &b in &sorted[i + 1..] {
            if i < local.len() && local.contains(&b) {
                continue;
            }
            let dd = gram[(a, a)] + gram[(b, b)] - 2.0 * gram[(a, b)];
            if dd <= 0.0 {
                continue;
            }
            let kb = gram[(k, k)] + gram[(b, b)] - 2.0 * gram[(k, b)];
            let proj = gram[(k, a)] - gram[(k, b)] - gram[(a, b)] + gram[(b, b)];
            let r2 = kb - proj * proj / dd;
            if r2 <= limit {
                pairs.push((r2, a, b));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    out.extend(pairs.into_iter().take(MAX_GLOBAL_PAIRS).map(|(_, a, b)| vec![a, b]));
    for (i, &a) in local.iter().enumerate() {
        for (j, &b) in local.iter().enumerate().skip(i + 1) {
            for &c in &local[j + 1..] {
                out.push(vec![a, b, c]);
            }
        }
    }
    out.extend((4..=local.len()).map(|p| local[..p].to_vec()));
    if sorted.len() > local.len() {
        out.push(sorted.to_vec());
    }
    out
}

/// Affine least-squares fit of Gram column `k` by the columns `others`,
/// rows restricted to `rows`.
fn affine_fit(gram: &DMatrix<f64>, rows: &[usize], k: usize, others: &[usize]) -> Fit {
    let m = rows.len();
    let p = others.len();
    let target = DVector::from_iterator(m, rows.iter().map(|&r| gram[(r, k)]));
    let last = others[p - 1];
    let coeffs = if p == 1 {
        vec![1.0]
    } else {
        // c_last = 1 - sum of the rest.
        let b = DMatrix::from_fn(m, p - 1, |r, j| gram[(rows[r], others[j])] - gram[(rows[r], last)]);
        let t = DVector::from_iterator(m, rows.iter().map(|&r| gram[(r, k)] - gram[(r, last)]));
        let svd = b.svd(true, true);
        let cutoff = 1e-13 * svd.singular_values.max();
        let z = svd
            .solve(&t, cutoff)
            .unwrap_or_else(|_| DVector::zeros(p - 1));
        let mut c: Vec<f64> = z.iter().copied().collect();
        c.push(1.0 - z.sum());
        c
    };
    let fitted = DVector::from_iterator(
        m,
        rows.iter()
            .map(|&r| others.iter().zip(&coeffs).map(|(&o, c)| c * gram[(r, o)]).sum::<f64>()),
    );
    let residual = &target - fitted;
    let scale = target.norm();
    let relative = if scale > 0.0 {
        residual.norm() / scale
    } else {
        residual.norm()
    };
    // u = e_k - c over rows; |phi_k - sum c phi|^2 = u^T G u = u . r.
    let u_dot_r: f64 = rows
        .iter()
        .zip(residual.iter())
        .map(|(&r, res)| {
            let u = if r == k {
                1.0
            } else {
                others.iter().position(|&o| o == r).map_or(0.0, |pos| -coeffs[pos])
            };
            u * res
        })
        .sum();
    // Rounding in r is about eps * |u|_1 * max|G| per entry; discount it so
    // exact folds are not rejected on noise amplified by the square root.
    let g_max = others.iter().chain([&k]).map(|&i| gram[(i, i)].abs()).fold(0.0, f64::max);
    let u_l1 = 1.0 + coeffs.iter().map(|c| c.abs()).sum::<f64>();
    let noise = 8.0 * f64::EPSILON * u_l1 * u_l1 * g_max;
    Fit {
        coeffs,
        relative,
        feature_residual: (u_dot_r.abs() - noise).max(0.0).sqrt(),
    }
}

/// Remove support vectors that are (numerically) affine combinations of the
/// remaining ones and fold their weight into the others.
///
/// Candidates are visited once, most dependent first. For each, the
/// nearest singles and pairs are tried, then any near-exact pair, then
/// local triples, nearest prefixes and the full kept set, so sparse folds
/// win. A fold is accepted when the relative residual is within
/// `cfg.prune_tol`, the shift it can cause is negligible, and every updated
/// multiplier stays in `(0, C]` with its original label.
pub fn prune_dependent(model: &SvmModel, cfg: &TrainConfig) -> SvmModel {
    let n = model.sv_count();
    if n < 2 {
        return model.clone();
    }
    let kernel = model.kernel;
    let gram = DMatrix::from_fn(n, n, |i, j| {
        kernel.eval_unchecked(&model.support_vectors[i], &model.support_vectors[j])
    });
    let mut beta: Vec<f64> = model.alphas.iter().zip(&model.labels).map(|(a, &y)| a * y as f64).collect();
    let mut keep: Vec<usize> = (0..n).collect();
    let c_reg = model.c_reg;

    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|k| {
            let others: Vec<usize> = (0..n).filter(|&i| i != k).collect();
            (affine_fit(&gram, &keep, k, &others).relative, k)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    for &(_, k) in &order {
        let mut others: Vec<usize> = keep.iter().copied().filter(|&i| i != k).collect();
        if others.is_empty() || others.len() == keep.len() {
            continue;
        }
        // Sparse folds first: nearest vectors in feature space, then all.
        let dist = |i: usize| gram[(k, k)] + gram[(i, i)] - 2.0 * gram[(k, i)];
        others.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
        for subset in candidate_subsets(&gram, k, &others, cfg.prune_tol) {
            let subset = &subset[..];
            let fit = affine_fit(&gram, &keep, k, subset);
            if fit.relative > cfg.prune_tol || beta[k].abs() * fit.feature_residual > MAX_FOLD_SHIFT {
                continue;
            }
            let updated: Vec<f64> = subset.iter().zip(&fit.coeffs).map(|(&i, c)| beta[i] + c * beta[k]).collect();
            let admissible = subset.iter().zip(&updated).all(|(&i, &b)| {
                let y = model.labels[i] as f64;
                y * b > 0.0 && y * b <= c_reg * (1.0 + 1e-12)
            });
            if !admissible {
                continue;
            }
            for (&i, b) in subset.iter().zip(updated) {
                beta[i] = b;
            }
            beta[k] = 0.0;
            keep.retain(|&i| i != k);
            break;
        }
    }

    if keep.len() == n {
        return model.clone();
    }
    let mut pruned = SvmModel {
        support_vectors: Vec::with_capacity(keep.len()),
        alphas: Vec::with_capacity(keep.len()),
        labels: Vec::with_capacity(keep.len()),
        ..model.clone()
    };
    for &i in &keep {
        pruned.support_vectors.push(model.support_vectors[i].clone());
        pruned.alphas.push(beta[i].abs().min(c_reg));
        pruned.labels.push(model.labels[i]);
    }
    pruned
}
