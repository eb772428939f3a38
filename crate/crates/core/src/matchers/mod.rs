//! Per-subject statistics and the three matchers.
//!
//! * weighted Euclidean distance, `ED = (1/n) * sqrt(sum C_i (X_i - M_i)^2 / sigma_i^2)`,
//!   with the `1/n` outside the root;
//! * Mahalanobis distance to the subject mean under a shrinkage covariance;
//! * Gaussian empirical rule: number of selected features within
//!   `k` standard deviations of the mean.
//!
//! Matchers work on plain `&[f64]` so the statistics can be exercised on
//! small toy dimensions as well as on full feature vectors.

mod norm;
mod stats;

pub use norm::{make_score_vector, NormStats, ScoreVector};
pub use stats::{fit_subject, CholeskyFactor, SubjectStats};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    /// Per-feature weights `C_i`; `None` means all ones.
    pub weights: Option<Vec<f64>>,
    /// Width of the Gaussian-rule acceptance band in standard deviations.
    pub k: u8,
    pub epsilon_std: f64,
    pub shrinkage_lambda: f64,
    pub split_seed: u64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            weights: None,
            k: 3,
            epsilon_std: 1e-6,
            shrinkage_lambda: 0.9,
            split_seed: 0,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.k) {
            return Err(Error::Config(format!("k must be 1, 2 or 3, got {}", self.k)));
        }
        if !(self.epsilon_std > 0.0) {
            return Err(Error::Config("epsilon_std must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.shrinkage_lambda) {
            return Err(Error::Config(format!(
                "shrinkage_lambda must lie in [0, 1], got {}",
                self.shrinkage_lambda
            )));
        }
        if let Some(w) = &self.weights {
            if w.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
                return Err(Error::Config("feature weights must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::shape(expected, actual));
    }
    Ok(())
}

/// Weighted, variance-normalized Euclidean distance with the `1/n` factor
/// applied outside the square root.
pub fn euclidean_score(query: &[f64], stats: &SubjectStats, cfg: &MatcherConfig) -> Result<f64> {
    let n = stats.mean.len();
    check_dim(n, query.len())?;
    if let Some(w) = &cfg.weights {
        check_dim(n, w.len())?;
    }
    let sum: f64 = (0..n)
        .map(|i| {
            let d = query[i] - stats.mean[i];
            cfg.weight(i) * d * d / (stats.std[i] * stats.std[i])
        })
        .sum();
    Ok(sum.sqrt() / n as f64)
}

/// `sqrt((f - mu)^T C^-1 (f - mu))` via a forward solve against the stored
/// Cholesky factor.
pub fn mahalanobis_score(query: &[f64], stats: &SubjectStats) -> Result<f64> {
    check_dim(stats.mean.len(), query.len())?;
    let diff: Vec<f64> = query.iter().zip(&stats.mean).map(|(q, m)| q - m).collect();
    let z = stats.cholesky.solve_lower(&diff)?;
    Ok(z.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Count of selected features with `|mu_i - q_i| <= k * sigma_i`.
pub fn gaussian_empirical_score(query: &[f64], stats: &SubjectStats, cfg: &MatcherConfig) -> Result<f64> {
    check_dim(stats.mean.len(), query.len())?;
    let k = cfg.k as f64;
    let count = (0..query.len())
        .filter(|&i| stats.selected_mask[i] && (stats.mean[i] - query[i]).abs() <= k * stats.std[i])
        .count();
    Ok(count as f64)
}

/// The three raw scores of `query` against one subject.
pub fn raw_scores(query: &[f64], stats: &SubjectStats, cfg: &MatcherConfig) -> Result<[f64; 3]> {
    Ok([
        euclidean_score(query, stats, cfg)?,
        mahalanobis_score(query, stats)?,
        gaussian_empirical_score(query, stats, cfg)?,
    ])
}
