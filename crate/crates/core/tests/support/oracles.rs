//! Straight-line reference implementations used as test oracles.
//!
//! Written against the formulas only, with plain loops and std, and no
//! calls into the library.

#![allow(dead_code)]

/// `(1/n) * sqrt(sum w_i (q_i - mu_i)^2 / sigma_i^2)`.
pub fn euclidean(q: &[f64], mean: &[f64], std: &[f64], weights: Option<&[f64]>) -> f64 {
    let n = q.len();
    let mut acc = 0.0;
    for i in 0..n {
        let w = match weights {
            Some(w) => w[i],
            None => 1.0,
        };
        let z = (q[i] - mean[i]) / std[i];
        acc += w * z * z;
    }
    acc.sqrt() / n as f64
}

/// Gauss-Jordan inverse with partial pivoting of a row-major `n x n` matrix.
pub fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let w = 2 * n;
    let mut m = vec![0.0; n * w];
    for r in 0..n {
        for c in 0..n {
            m[r * w + c] = a[r * n + c];
        }
        m[r * w + n + r] = 1.0;
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * w + col].abs() > m[piv * w + col].abs() {
                piv = r;
            }
        }
        if m[piv * w + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..w {
                m.swap(piv * w + c, col * w + c);
            }
        }
        let d = m[col * w + col];
        for c in 0..w {
            m[col * w + c] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * w + col];
                if f != 0.0 {
                    for c in 0..w {
                        m[r * w + c] -= f * m[col * w + c];
                    }
                }
            }
        }
    }
    let mut inv = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            inv[r * n + c] = m[r * w + n + c];
        }
    }
    Some(inv)
}

/// `sqrt(d^T C^-1 d)` through an explicit inverse.
pub fn mahalanobis(q: &[f64], mean: &[f64], cov: &[f64]) -> f64 {
    let n = q.len();
    let inv = invert(cov, n).expect("invertible covariance");
    let d: Vec<f64> = (0..n).map(|i| q[i] - mean[i]).collect();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += d[i] * inv[i * n + j] * d[j];
        }
    }
    acc.max(0.0).sqrt()
}

/// Number of masked features with `|mu_i - q_i| <= k sigma_i`.
pub fn gaussian_count(q: &[f64], mean: &[f64], std: &[f64], mask: &[bool], k: f64) -> f64 {
    let mut n = 0;
    for i in 0..q.len() {
        if mask[i] && (mean[i] - q[i]).abs() <= k * std[i] {
            n += 1;
        }
    }
    n as f64
}

/// Mean, population std floored at `eps`, and population covariance.
pub fn population_stats(samples: &[Vec<f64>], eps: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = samples.len() as f64;
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        for i in 0..d {
            mean[i] += s[i] / n;
        }
    }
    let mut cov = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for s in samples {
                acc += (s[i] - mean[i]) * (s[j] - mean[j]);
            }
            cov[i * d + j] = acc / n;
        }
    }
    let std = (0..d).map(|i| cov[i * d + i].sqrt().max(eps)).collect();
    (mean, std, cov)
}

/// `(1 - lambda) C + lambda * max(tr(C)/d, eps^2) * I`.
pub fn shrink(cov: &[f64], d: usize, lambda: f64, eps: f64) -> Vec<f64> {
    let mut tr = 0.0;
    for i in 0..d {
        tr += cov[i * d + i];
    }
    let target = (tr / d as f64).max(eps * eps);
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = (1.0 - lambda) * cov[i * d + j] + if i == j { lambda * target } else { 0.0 };
        }
    }
    out
}

/// Scan all 255 thresholds; between-class variance `w0 w1 (mu0 - mu1)^2`
/// compared exactly as `(s0 n1 - s1 n0)^2 / (n0 n1)`. Smallest best wins.
pub fn otsu_exhaustive(hist: &[u64; 256]) -> Option<u8> {
    let mut best: Option<(u8, u128, u128)> = None;
    for t in 0..255usize {
        let (mut n0, mut s0, mut n1, mut s1) = (0u128, 0u128, 0u128, 0u128);
        for (v, &count) in hist.iter().enumerate() {
            let c = count as u128;
            if v <= t {
                n0 += c;
                s0 += c * v as u128;
            } else {
                n1 += c;
                s1 += c * v as u128;
            }
        }
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let (a, b) = (s0 * n1, s1 * n0);
        let diff = a.max(b) - a.min(b);
        let num = diff * diff;
        let den = n0 * n1;
        if num == 0 {
            continue;
        }
        match best {
            Some((_, bn, bd)) if num * bd <= bn * den => {}
            _ => best = Some((t as u8, num, den)),
        }
    }
    best.map(|b| b.0)
}

/// `P(rank <= r)` by direct counting.
pub fn cmc_reference(ranks: &[usize], n_subjects: usize) -> Vec<f64> {
    (1..=n_subjects)
        .map(|r| ranks.iter().filter(|&&x| x <= r).count() as f64 / ranks.len() as f64)
        .collect()
}

pub fn linear_kernel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rbf_kernel(gamma: f64) -> impl Fn(&[f64], &[f64]) -> f64 {
    move |a, b| {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (-gamma * d2).exp()
    }
}

/// Solve `A x = b` (row-major `n x n`) by Gaussian elimination; `None` when
/// a pivot falls below `1e-10` relative to the largest entry.
pub fn solve_linear(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut m: Vec<f64> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() < 1e-10 * scale {
            return None;
        }
        for c in 0..n {
            m.swap(piv * n + c, col * n + c);
        }
        rhs.swap(piv, col);
        for r in col + 1..n {
            let f = m[r * n + col] / m[col * n + col];
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in r + 1..n {
            acc -= m[r * n + c] * x[c];
        }
        x[r] = acc / m[r * n + r];
    }
    Some(x)
}

/// Exact optimum of the SVM dual found by enumerating every
/// `{at 0, at C, free}` pattern and solving its KKT system.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub alphas: Vec<f64>,
    pub objective: f64,
    /// Interval of biases satisfying the KKT conditions.
    pub bias_lo: f64,
    pub bias_hi: f64,
}

impl QpSolution {
    /// `sum_j alpha_j y_j K(x, x_j)` without the bias.
    pub fn kernel_part(&self, x: &[f64], points: &[Vec<f64>], labels: &[i8], k: &dyn Fn(&[f64], &[f64]) -> f64) -> f64 {
        let mut acc = 0.0;
        for j in 0..points.len() {
            acc += self.alphas[j] * labels[j] as f64 * k(x, &points[j]);
        }
        acc
    }
}

pub fn svm_dual_bruteforce(
    points: &[Vec<f64>],
    labels: &[i8],
    c: f64,
    k: &dyn Fn(&[f64], &[f64]) -> f64,
) -> Option<QpSolution> {
    let n = points.len();
    assert!(n <= 10, "brute force is exponential");
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            q[i * n + j] = y[i] * y[j] * k(&points[i], &points[j]);
        }
    }
    let tol = 1e-9 * (1.0 + c);
    let mut best: Option<QpSolution> = None;
    let patterns = 3usize.pow(n as u32);
    for code in 0..patterns {
        // 0 = at zero, 1 = at C, 2 = free.
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let mut bias_lo = f64::NEG_INFINITY;
        let mut bias_hi = f64::INFINITY;

        if !free.is_empty() {
            // Unknowns alpha_F and b:
            //   sum_j Q_ij alpha_j + y_i b = 1 for i in F
            //   sum_j y_j alpha_j = 0
            let m = free.len() + 1;
            let mut a = vec![0.0; m * m];
            let mut rhs = vec![0.0; m];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[r * m + cc] = q[i * n + j];
                }
                a[r * m + m - 1] = y[i];
                let fixed: f64 = (0..n).filter(|&j| state[j] == 1).map(|j| q[i * n + j] * c).sum();
                rhs[r] = 1.0 - fixed;
            }
            for (cc, &j) in free.iter().enumerate() {
                a[(m - 1) * m + cc] = y[j];
            }
            rhs[m - 1] = -(0..n).filter(|&j| state[j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = solve_linear(&a, &rhs, m) else {
                continue;
            };
            if sol[..free.len()].iter().any(|&v| v < -tol || v > c + tol) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
            bias_lo = sol[m - 1];
            bias_hi = sol[m - 1];
        } else {
            let balance: f64 = (0..n).map(|j| y[j] * alpha[j]).sum();
            if balance.abs() > tol {
                continue;
            }
        }

        // Remaining KKT conditions, y_i f(x_i) >= 1 at zero, <= 1 at C,
        // written as bounds on b.
        let mut ok = true;
        for i in 0..n {
            if state[i] == 2 {
                continue;
            }
            let g: f64 = (0..n).map(|j| q[i * n + j] * alpha[j]).sum();
            // y_i f_i = g + y_i b.
            let need_ge = state[i] == 0;
            let bound = (1.0 - g) * y[i];
            if (y[i] > 0.0) == need_ge {
                bias_lo = bias_lo.max(bound);
            } else {
                bias_hi = bias_hi.min(bound);
            }
        }
        if free.is_empty() {
            ok &= bias_lo <= bias_hi + 1e-9;
        } else {
            ok &= bias_lo <= bias_hi + 1e-7;
        }
        if !ok {
            continue;
        }
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += alpha[i] * alpha[j] * q[i * n + j];
            }
        }
        let objective = alpha.iter().sum::<f64>() - 0.5 * quad;
        if best.as_ref().is_none_or(|b| objective > b.objective) {
            best = Some(QpSolution {
                alphas: alpha,
                objective,
                bias_lo,
                bias_hi,
            });
        }
    }
    best
}

/// Largest violation of the SVM KKT conditions for given multipliers and
/// bias, in units of the margin `y_i f(x_i) - 1`.
pub fn kkt_residual(
    points: &[Vec<f64>],
    labels: &[i8],
    alphas: &[f64],
    bias: f64,
    c: f64,
    k: &dyn Fn(&[f64], &[f64]) -> f64,
) -> f64 {
    let n = points.len();
    let mut worst = 0.0f64;
    let mut balance = 0.0;
    for i in 0..n {
        let mut f = bias;
        for j in 0..n {
            f += alphas[j] * labels[j] as f64 * k(&points[i], &points[j]);
        }
        let m = labels[i] as f64 * f - 1.0;
        let a = alphas[i];
        let tol = 1e-12 * c;
        let v = if a <= tol {
            (-m).max(0.0)
        } else if a >= c - tol {
            m.max(0.0)
        } else {
            m.abs()
        };
        worst = worst.max(v);
        balance += a * labels[i] as f64;
    }
    worst.max(balance.abs())
}
