//! Kernel SVM fusion of matcher scores.
//!
//! The decision surface is `f(m) = sum_i alpha_i y_i K(m, m_i) + b`, trained
//! on normalized score vectors labelled `+1` (genuine) or `-1` (impostor).
//! Its raw value is the fused similarity used for ranking; its sign is the
//! accept/reject decision.

mod prune;
mod smo;

pub use prune::prune_dependent;
pub use smo::{dual_objective, train, TrainOutcome};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Version tag written into every model file.
pub const MODEL_VERSION: &str = "sigfuse-svm/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Default for Kernel {
    fn default() -> Self {
        // 1 / input dimension for 3 matcher scores.
        Kernel::Rbf { gamma: 1.0 / 3.0 }
    }
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::Config(format!("rbf gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// `K(a, b)`: dot product or `exp(-gamma * |a - b|^2)`.
pub fn kernel_eval(kernel: &Kernel, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(a.len(), b.len()));
    }
    Ok(kernel.eval_unchecked(a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub kernel: Kernel,
    /// Box constraint `C`.
    pub c_reg: f64,
    pub kkt_tol: f64,
    /// Iteration budget, in multiples of the training-set size.
    pub max_passes: usize,
    /// Relative least-squares residual below which a support vector is
    /// treated as a combination of the others.
    pub prune_tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::default(),
            c_reg: 10.0,
            kkt_tol: 1e-3,
            max_passes: 1000,
            prune_tol: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.c_reg > 0.0 && self.c_reg.is_finite()) {
            return Err(Error::Config(format!("c_reg must be positive, got {}", self.c_reg)));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(Error::Config("kkt_tol must be positive".into()));
        }
        if self.max_passes == 0 {
            return Err(Error::Config("max_passes must be positive".into()));
        }
        if !(self.prune_tol > 0.0) {
            return Err(Error::Config("prune_tol must be positive".into()));
        }
        Ok(())
    }
}

/// A trained (and possibly pruned) SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub version: String,
    pub kernel: Kernel,
    pub c_reg: f64,
    pub bias: f64,
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
}

impl SvmModel {
    pub fn sv_count(&self) -> usize {
        self.support_vectors.len()
    }

    /// `sum_i alpha_i y_i`, zero for a balanced expansion.
    pub fn label_balance(&self) -> f64 {
        self.alphas.iter().zip(&self.labels).map(|(a, &y)| a * y as f64).sum()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: SvmModel = serde_json::from_str(&text)?;
        model.check().map_err(|reason| Error::Format {
            path: path.to_path_buf(),
            reason,
        })?;
        Ok(model)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.version != MODEL_VERSION {
            return Err(format!("unsupported model version {:?}", self.version));
        }
        let n = self.support_vectors.len();
        if self.alphas.len() != n || self.labels.len() != n {
            return Err("support_vectors, alphas and labels differ in length".into());
        }
        if self.labels.iter().any(|&y| y != 1 && y != -1) {
            return Err("labels must be +1 or -1".into());
        }
        self.kernel.validate().map_err(|e| e.to_string())
    }
}

/// Raw decision value `sum_i alpha_i y_i K(m, m_i) + b`.
pub fn fused_score(model: &SvmModel, m: &[f64]) -> f64 {
    model
        .support_vectors
        .iter()
        .zip(&model.alphas)
        .zip(&model.labels)
        .map(|((sv, &a), &y)| a * y as f64 * model.kernel.eval_unchecked(m, sv))
        .sum::<f64>()
        + model.bias
}

/// Sign of the fused score; an exact zero counts as genuine.
pub fn decide(model: &SvmModel, m: &[f64]) -> i8 {
    if fused_score(model, m) >= 0.0 {
        1
    } else {
        -1
    }
}
