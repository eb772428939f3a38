use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MatcherConfig;
use crate::{Error, Result};

/// Lower-triangular Cholesky factor `L` of a covariance `C = L L^T`,
/// stored row-major (`lower[i * dim + j]`, zero above the diagonal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CholeskyFactor {
    pub dim: usize,
    pub lower: Vec<f64>,
}

impl CholeskyFactor {
    /// Factor a symmetric positive-definite row-major matrix.
    pub fn factor(dim: usize, cov: &[f64]) -> Result<Self> {
        if cov.len() != dim * dim {
            return Err(Error::shape(dim * dim, cov.len()));
        }
        let m = DMatrix::from_row_slice(dim, dim, cov);
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Numerical(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
        let l = chol.l();
        let mut lower = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                lower[i * dim + j] = l[(i, j)];
            }
        }
        Ok(Self { dim, lower })
    }

    /// Solve `L z = b` by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim {
            return Err(Error::shape(self.dim, b.len()));
        }
        let n = self.dim;
        let mut z = vec![0.0; n];
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i + 1];
            let partial: f64 = row[..i].iter().zip(&z[..i]).map(|(l, zj)| l * zj).sum();
            let diag = row[i];
            if !(diag > 0.0) {
                return Err(Error::Numerical(format!("non-positive Cholesky pivot at {i}")));
            }
            z[i] = (b[i] - partial) / diag;
        }
        Ok(z)
    }

    /// `L L^T`, row-major.
    pub fn covariance(&self) -> Vec<f64> {
        let n = self.dim;
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (0..=j).map(|k| self.lower[i * n + k] * self.lower[j * n + k]).sum();
                c[i * n + j] = v;
                c[j * n + i] = v;
            }
        }
        c
    }
}

/// Enrollment statistics of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectStats {
    pub subject_id: u32,
    pub n_enrolled: usize,
    pub mean: Vec<f64>,
    /// Population standard deviation, floored at `epsilon_std`.
    pub std: Vec<f64>,
    /// Features that passed the Gaussian-rule selection.
    pub selected_mask: Vec<bool>,
    pub shrinkage_lambda: f64,
    /// Scale of the identity target, `max(tr(C) / D, epsilon_std^2)`.
    pub shrinkage_scale: f64,
    /// Regularized covariance, stored as its Cholesky factor.
    pub cholesky: CholeskyFactor,
}

impl SubjectStats {
    /// Assemble statistics from explicit parts, factoring `cov` (row-major).
    pub fn from_parts(
        subject_id: u32,
        mean: Vec<f64>,
        std: Vec<f64>,
        cov: &[f64],
        selected_mask: Vec<bool>,
    ) -> Result<Self> {
        let d = mean.len();
        if std.len() != d {
            return Err(Error::shape(d, std.len()));
        }
        if selected_mask.len() != d {
            return Err(Error::shape(d, selected_mask.len()));
        }
        if std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidInput("standard deviations must be positive".into()));
        }
        Ok(Self {
            subject_id,
            n_enrolled: 0,
            mean,
            std,
            selected_mask,
            shrinkage_lambda: 0.0,
            shrinkage_scale: 0.0,
            cholesky: CholeskyFactor::factor(d, cov)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn mean_and_std(samples: &[&[f64]], eps: f64) -> (Vec<f64>, Vec<f64>) {
    let d = samples[0].len();
    let n = samples.len() as f64;
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let std = (0..d)
        .map(|i| {
            let var = samples.iter().map(|s| (s[i] - mean[i]).powi(2)).sum::<f64>() / n;
            var.sqrt().max(eps)
        })
        .collect();
    (mean, std)
}

/// Seed for the per-subject split shuffle.
fn split_rng(split_seed: u64, subject_id: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_seed ^ (subject_id as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Fit mean, floored population std, shrinkage covariance and the
/// Gaussian-rule feature mask from the enrolled samples of one subject.
///
/// The mask uses a seeded split into `n1 = ceil(2N/3)` samples that set the
/// band and `n2 = N - n1` samples that must all fall inside it.
pub fn fit_subject<S: AsRef<[f64]>>(subject_id: u32, samples: &[S], cfg: &MatcherConfig) -> Result<SubjectStats> {
    cfg.validate()?;
    if samples.len() < 2 {
        return Err(Error::InsufficientEnrollment {
            subject_id,
            required: 2,
            actual: samples.len(),
        });
    }
    let rows: Vec<&[f64]> = samples.iter().map(|s| s.as_ref()).collect();
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::InvalidInput("empty feature vectors".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::shape(d, bad.len()));
    }
    if let Some(w) = &cfg.weights {
        if w.len() != d {
            return Err(Error::shape(d, w.len()));
        }
    }
    let n = rows.len();
    let eps = cfg.epsilon_std;
    let (mean, std) = mean_and_std(&rows, eps);

    // Population covariance, then shrink toward a scaled identity.
    let mut cov = vec![0.0; d * d];
    for r in &rows {
        for i in 0..d {
            let di = r[i] - mean[i];
            if di == 0.0 {
                continue;
            }
            let row = &mut cov[i * d..(i + 1) * d];
            for j in 0..=i {
                row[j] += di * (r[j] - mean[j]);
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[i * d + j] * inv_n;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let lambda = cfg.shrinkage_lambda;
    let scale = (trace / d as f64).max(eps * eps);
    for v in cov.iter_mut() {
        *v *= 1.0 - lambda;
    }
    for i in 0..d {
        cov[i * d + i] += lambda * scale;
    }
    let cholesky = CholeskyFactor::factor(d, &cov)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut split_rng(cfg.split_seed, subject_id));
    let n1 = (2 * n).div_ceil(3);
    let (band_idx, check_idx) = order.split_at(n1);
    let band: Vec<&[f64]> = band_idx.iter().map(|&i| rows[i]).collect();
    let (band_mean, band_std) = mean_and_std(&band, eps);
    let k = cfg.k as f64;
    let selected_mask = (0..d)
        .map(|i| {
            check_idx
                .iter()
                .all(|&s| (band_mean[i] - rows[s][i]).abs() <= k * band_std[i])
        })
        .collect();

    Ok(SubjectStats {
        subject_id,
        n_enrolled: n,
        mean,
        std,
        selected_mask,
        shrinkage_lambda: lambda,
        shrinkage_scale: scale,
        cholesky,
    })
}
