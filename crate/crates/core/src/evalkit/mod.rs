//! Closed-set identification protocol and evaluation.
//!
//! Every genuine subject contributes a fixed number of enrollment and probe
//! samples. Probes are ranked against the whole gallery and the rank of the
//! true subject feeds a cumulative match characteristic (CMC) curve.

mod experiment;
mod manifest;
mod synth;

pub use experiment::{
    run_experiment, write_cmc_csv, CmcBySystem, CorpusSummary, ExperimentConfig, ExperimentReport, FusionSummary, RatesBySystem,
    REPORT_VERSION,
};
pub use manifest::{load_corpus, write_corpus, CorpusManifest, ManifestSample, ManifestSubject, MANIFEST_VERSION};
pub use synth::{synth_corpus, synth_corpus_with, SynthConfig};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matchers::{make_score_vector, raw_scores, MatcherConfig, NormStats, ScoreVector, SubjectStats};
use crate::raster::GrayImage;
use crate::svmfuse::{fused_score, SvmModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub sample_id: u32,
    pub raster: GrayImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSubject {
    pub subject_id: u32,
    /// `false` for a forger whose samples imitate `forged_victim`.
    pub genuine: bool,
    pub forged_victim: Option<u32>,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub subjects: Vec<CorpusSubject>,
}

impl Corpus {
    pub fn genuine(&self) -> impl Iterator<Item = &CorpusSubject> {
        self.subjects.iter().filter(|s| s.genuine)
    }

    pub fn forgers(&self) -> impl Iterator<Item = &CorpusSubject> {
        self.subjects.iter().filter(|s| !s.genuine)
    }

    pub fn sample_count(&self) -> usize {
        self.subjects.iter().map(|s| s.samples.len()).sum()
    }

    /// Structural checks: unique ids, forgers point at genuine subjects.
    pub fn validate(&self) -> Result<()> {
        let mut ids: Vec<u32> = self.subjects.iter().map(|s| s.subject_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Protocol("duplicate subject id in corpus".into()));
        }
        if self.genuine().count() < 2 {
            return Err(Error::Protocol("identification needs at least 2 genuine subjects".into()));
        }
        for s in self.forgers() {
            let victim = s.forged_victim.ok_or_else(|| {
                Error::Protocol(format!("forger subject {} names no victim", s.subject_id))
            })?;
            if !self.genuine().any(|g| g.subject_id == victim) {
                return Err(Error::Protocol(format!(
                    "forger subject {} targets unknown subject {victim}",
                    s.subject_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectSplit {
    pub subject_id: u32,
    pub enroll: Vec<u32>,
    pub probe: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub enroll_count: usize,
    pub probe_count: usize,
    pub subjects: Vec<SubjectSplit>,
}

/// Seeded per-subject shuffle of genuine samples into enrollment and probe
/// sets. Each subject's shuffle depends only on the seed and its id.
pub fn split(corpus: &Corpus, enroll: usize, probe: usize, seed: u64) -> Result<SplitPlan> {
    if enroll == 0 || probe == 0 {
        return Err(Error::Config("enroll and probe counts must be positive".into()));
    }
    let mut subjects = Vec::new();
    for s in corpus.genuine() {
        if s.samples.len() < enroll + probe {
            return Err(Error::Protocol(format!(
                "subject {} has {} samples, needs {} ({enroll} enroll + {probe} probe)",
                s.subject_id,
                s.samples.len(),
                enroll + probe
            )));
        }
        let mut ids: Vec<u32> = s.samples.iter().map(|x| x.sample_id).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (s.subject_id as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
        ids.shuffle(&mut rng);
        subjects.push(SubjectSplit {
            subject_id: s.subject_id,
            enroll: ids[..enroll].to_vec(),
            probe: ids[enroll..enroll + probe].to_vec(),
        });
    }
    Ok(SplitPlan {
        seed,
        enroll_count: enroll,
        probe_count: probe,
        subjects,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSubject {
    pub subject_id: u32,
    pub fused: f64,
    pub scores: ScoreVector,
}

/// Rank the whole gallery for one probe by fused score, descending; ties
/// go to the lower subject id.
pub fn identify(
    probe: &[f64],
    gallery: &[SubjectStats],
    fusion: &SvmModel,
    norm: &NormStats,
    cfg: &MatcherConfig,
) -> Result<Vec<RankedSubject>> {
    if gallery.is_empty() {
        return Err(Error::Protocol("empty gallery".into()));
    }
    let mut ranked = gallery
        .iter()
        .map(|stats| {
            let [ed, md, ge] = raw_scores(probe, stats, cfg)?;
            let scores = make_score_vector(ed, md, ge, norm);
            Ok(RankedSubject {
                subject_id: stats.subject_id,
                fused: fused_score(fusion, &scores.normalized),
                scores,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.fused.total_cmp(&a.fused).then(a.subject_id.cmp(&b.subject_id)));
    Ok(ranked)
}

/// 1-based rank of `truth` when `entries` are ordered by `key` (larger is
/// better), ties to the lower subject id.
pub fn rank_by<T>(entries: &[T], truth: u32, id: impl Fn(&T) -> u32, key: impl Fn(&T) -> f64) -> Option<usize> {
    let mut order: Vec<(f64, u32)> = entries.iter().map(|e| (key(e), id(e))).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    order.iter().position(|&(_, s)| s == truth).map(|p| p + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmcCurve {
    /// `probabilities[r - 1]` = fraction of probes ranked at `r` or better.
    pub probabilities: Vec<f64>,
    pub probe_count: usize,
}

impl CmcCurve {
    pub fn rank1(&self) -> f64 {
        self.probabilities[0]
    }
}

pub fn cmc(ranks: &[usize], n_subjects: usize) -> Result<CmcCurve> {
    if ranks.is_empty() {
        return Err(Error::Protocol("no probe ranks to evaluate".into()));
    }
    if let Some(&bad) = ranks.iter().find(|&&r| r == 0 || r > n_subjects) {
        return Err(Error::Protocol(format!("rank {bad} outside 1..={n_subjects}")));
    }
    let mut hist = vec![0usize; n_subjects];
    for &r in ranks {
        hist[r - 1] += 1;
    }
    let total = ranks.len();
    let mut running = 0;
    let probabilities = hist
        .iter()
        .map(|&h| {
            running += h;
            running as f64 / total as f64
        })
        .collect();
    Ok(CmcCurve {
        probabilities,
        probe_count: total,
    })
}
