use serde::{Deserialize, Serialize};

/// Raw matcher outputs plus their `[0, 1]` similarity-oriented form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub ed: f64,
    pub md: f64,
    pub ge: f64,
    pub normalized: [f64; 3],
}

/// Per-matcher min/max of the fusion training scores, in `[ed, md, ge]`
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl NormStats {
    pub fn fit<'a>(scores: impl IntoIterator<Item = &'a [f64; 3]>) -> Option<Self> {
        let mut it = scores.into_iter().peekable();
        let first = *it.peek()?;
        let mut min = *first;
        let mut max = *first;
        for s in it {
            for j in 0..3 {
                min[j] = min[j].min(s[j]);
                max[j] = max[j].max(s[j]);
            }
        }
        Some(Self { min, max })
    }

    fn unit(&self, j: usize, v: f64) -> Option<f64> {
        let span = self.max[j] - self.min[j];
        (span > 0.0).then(|| ((v - self.min[j]) / span).clamp(0.0, 1.0))
    }
}

/// Min-max normalize; the two distances are flipped so larger always means
/// more similar. A constant training column maps to 0.5.
pub fn make_score_vector(ed: f64, md: f64, ge: f64, norm: &NormStats) -> ScoreVector {
    let raw = [ed, md, ge];
    let normalized = std::array::from_fn(|j| match norm.unit(j, raw[j]) {
        None => 0.5,
        Some(u) if j < 2 => 1.0 - u,
        Some(u) => u,
    });
    ScoreVector { ed, md, ge, normalized }
}
