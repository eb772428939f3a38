//! End-to-end identification experiment.
//!
//! Fusion training vectors come from enrollment data only:
//! * genuine: each enrolled sample against its own subject's statistics;
//! * impostor: enrolled samples against other subjects' statistics, and
//!   forger samples against their victim's statistics.
//!
//! All forger pairs are kept; cross-subject pairs are subsampled (seeded)
//! until the impostor count reaches `impostor_ratio` times the genuine count.

use std::io::Write;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cmc, identify, rank_by, split, CmcCurve, Corpus, SplitPlan};
use crate::featex::{extract_features, FeatureVector};
use crate::matchers::{fit_subject, make_score_vector, raw_scores, MatcherConfig, NormStats, SubjectStats};
use crate::raster::{preprocess, PreprocessConfig};
use crate::svmfuse::{prune_dependent, train, SvmModel, TrainConfig};
use crate::{Error, Result};

/// Version tag of the experiment report.
pub const REPORT_VERSION: &str = "sigfuse-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub preprocess: PreprocessConfig,
    pub matcher: MatcherConfig,
    pub train: TrainConfig,
    pub enroll: usize,
    pub probe: usize,
    /// Impostor training vectors per genuine one.
    pub impostor_ratio: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preprocess: PreprocessConfig::default(),
            matcher: MatcherConfig::default(),
            train: TrainConfig::default(),
            enroll: 6,
            probe: 3,
            impostor_ratio: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.matcher.validate()?;
        self.train.validate()?;
        if self.enroll < 2 || self.probe == 0 {
            return Err(Error::Config("need at least 2 enrolled and 1 probe sample per subject".into()));
        }
        if !(self.impostor_ratio > 0.0 && self.impostor_ratio.is_finite()) {
            return Err(Error::Config("impostor_ratio must be positive".into()));
        }
        Ok(())
    }

    /// Copy with every internal seed derived from the experiment seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut cfg = self.clone();
        cfg.matcher.split_seed = derive_seed(seed, 1);
        cfg.train.seed = derive_seed(seed, 2);
        cfg
    }
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    // SplitMix64 finalizer.
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub genuine_subjects: usize,
    pub forger_subjects: usize,
    pub samples: usize,
    pub genuine_probes: usize,
    pub forgery_probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionSummary {
    pub genuine_vectors: usize,
    pub impostor_vectors: usize,
    pub forgery_vectors: usize,
    pub converged: bool,
    pub iterations: usize,
    pub kkt_violation: f64,
    pub dual_objective: f64,
    pub support_vectors: usize,
    pub support_vectors_pruned: usize,
    pub bias: f64,
    pub norm: NormStats,
}

/// One value per system, in the fixed order ED, MD, GE, fused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatesBySystem {
    pub ed: f64,
    pub md: f64,
    pub ge: f64,
    pub fused: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmcBySystem {
    pub ed: CmcCurve,
    pub md: CmcCurve,
    pub ge: CmcCurve,
    pub fused: CmcCurve,
}

impl CmcBySystem {
    pub fn rank1(&self) -> RatesBySystem {
        RatesBySystem {
            ed: self.ed.rank1(),
            md: self.md.rank1(),
            ge: self.ge.rank1(),
            fused: self.fused.rank1(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub corpus: CorpusSummary,
    pub split: SplitPlan,
    pub fusion: FusionSummary,
    pub rank1: RatesBySystem,
    /// Share of forgeries whose top-ranked subject is the forged victim.
    pub forgery_rank1: Option<RatesBySystem>,
    pub cmc: CmcBySystem,
    /// Pruned fusion model used for every ranking above.
    pub model: SvmModel,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// CMC table with header `rank,ed,md,ge,fused`.
pub fn write_cmc_csv<W: Write>(mut out: W, cmc: &CmcBySystem) -> std::io::Result<()> {
    writeln!(out, "rank,ed,md,ge,fused")?;
    for r in 0..cmc.fused.probabilities.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            r + 1,
            cmc.ed.probabilities[r],
            cmc.md.probabilities[r],
            cmc.ge.probabilities[r],
            cmc.fused.probabilities[r]
        )?;
    }
    Ok(())
}

/// Ranks of `truth` under each system, in ED, MD, GE, fused order.
fn ranks_for(
    probe: &[f64],
    truth: u32,
    gallery: &[SubjectStats],
    model: &SvmModel,
    norm: &NormStats,
    cfg: &MatcherConfig,
) -> Result<[usize; 4]> {
    let ranked = identify(probe, gallery, model, norm, cfg)?;
    let id = |r: &super::RankedSubject| r.subject_id;
    let missing = || Error::Protocol(format!("subject {truth} is not enrolled"));
    let ed = rank_by(&ranked, truth, id, |r| -r.scores.ed).ok_or_else(missing)?;
    let md = rank_by(&ranked, truth, id, |r| -r.scores.md).ok_or_else(missing)?;
    let ge = rank_by(&ranked, truth, id, |r| r.scores.ge).ok_or_else(missing)?;
    let fused = ranked.iter().position(|r| r.subject_id == truth).ok_or_else(missing)? + 1;
    Ok([ed, md, ge, fused])
}

fn curves(ranks: &[[usize; 4]], n_subjects: usize) -> Result<CmcBySystem> {
    let column = |j: usize| cmc(&ranks.iter().map(|r| r[j]).collect::<Vec<_>>(), n_subjects);
    Ok(CmcBySystem {
        ed: column(0)?,
        md: column(1)?,
        ge: column(2)?,
        fused: column(3)?,
    })
}

/// Run the full protocol. The report is a pure function of the corpus, the
/// configuration and `seed`.
pub fn run_experiment(corpus: &Corpus, cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    corpus.validate()?;
    let cfg = cfg.with_seed(seed);

    // Features for every sample, in corpus order.
    let jobs: Vec<(usize, usize)> = corpus
        .subjects
        .iter()
        .enumerate()
        .flat_map(|(s, subj)| (0..subj.samples.len()).map(move |k| (s, k)))
        .collect();
    let flat: Vec<FeatureVector> = jobs
        .par_iter()
        .map(|&(s, k)| {
            let sample = &corpus.subjects[s].samples[k];
            preprocess(&sample.raster, &cfg.preprocess)
                .and_then(|set| extract_features(&set))
                .map_err(|e| {
                    Error::Protocol(format!(
                        "feature extraction failed for subject {} sample {}: {e}",
                        corpus.subjects[s].subject_id, sample.sample_id
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let mut features: Vec<Vec<FeatureVector>> = Vec::with_capacity(corpus.subjects.len());
    let mut it = flat.into_iter();
    for subj in &corpus.subjects {
        features.push(it.by_ref().take(subj.samples.len()).collect());
    }
    let lookup = |s: usize, sample_id: u32| -> &FeatureVector {
        let k = corpus.subjects[s].samples.iter().position(|x| x.sample_id == sample_id).expect("id from split");
        &features[s][k]
    };

    let plan = split(corpus, cfg.enroll, cfg.probe, seed)?;
    let genuine_idx: Vec<usize> = (0..corpus.subjects.len()).filter(|&s| corpus.subjects[s].genuine).collect();

    let gallery: Vec<SubjectStats> = genuine_idx
        .par_iter()
        .zip(&plan.subjects)
        .map(|(&s, sp)| {
            let enrolled: Vec<&FeatureVector> = sp.enroll.iter().map(|&id| lookup(s, id)).collect();
            fit_subject(sp.subject_id, &enrolled, &cfg.matcher)
        })
        .collect::<Result<_>>()?;
    let gallery_pos = |subject_id: u32| gallery.iter().position(|g| g.subject_id == subject_id);

    // Training pairs as (feature, gallery index).
    let mut genuine_pairs: Vec<(&FeatureVector, usize)> = Vec::new();
    let mut cross_pairs: Vec<(&FeatureVector, usize)> = Vec::new();
    for (g, (&s, sp)) in genuine_idx.iter().zip(&plan.subjects).enumerate() {
        for &id in &sp.enroll {
            let f = lookup(s, id);
            genuine_pairs.push((f, g));
            for other in (0..gallery.len()).filter(|&o| o != g) {
                cross_pairs.push((f, other));
            }
        }
    }
    let mut forgery_pairs: Vec<(&FeatureVector, usize, u32)> = Vec::new();
    for (s, subj) in corpus.subjects.iter().enumerate().filter(|(_, x)| !x.genuine) {
        let victim = subj.forged_victim.expect("validated corpus");
        let g = gallery_pos(victim).expect("validated corpus");
        for f in &features[s] {
            forgery_pairs.push((f, g, victim));
        }
    }

    let wanted = ((genuine_pairs.len() as f64) * cfg.impostor_ratio).round() as usize;
    let n_cross = wanted.saturating_sub(forgery_pairs.len()).min(cross_pairs.len());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3));
    let mut picked = index::sample(&mut rng, cross_pairs.len(), n_cross).into_vec();
    picked.sort_unstable();

    let impostor_pairs: Vec<(&FeatureVector, usize)> = picked
        .iter()
        .map(|&i| cross_pairs[i])
        .chain(forgery_pairs.iter().map(|&(f, g, _)| (f, g)))
        .collect();
    let score = |&(f, g): &(&FeatureVector, usize)| raw_scores(f.as_slice(), &gallery[g], &cfg.matcher);
    let genuine_raw: Vec<[f64; 3]> = genuine_pairs.par_iter().map(score).collect::<Result<_>>()?;
    let impostor_raw: Vec<[f64; 3]> = impostor_pairs.par_iter().map(score).collect::<Result<_>>()?;

    let norm = NormStats::fit(genuine_raw.iter().chain(&impostor_raw))
        .ok_or_else(|| Error::Training("no fusion training vectors".into()))?;
    let to_vec = |r: &[f64; 3]| make_score_vector(r[0], r[1], r[2], &norm).normalized;
    let points: Vec<[f64; 3]> = genuine_raw.iter().chain(&impostor_raw).map(to_vec).collect();
    let labels: Vec<i8> = std::iter::repeat_n(1, genuine_raw.len())
        .chain(std::iter::repeat_n(-1, impostor_raw.len()))
        .collect();
    let outcome = train(&points, &labels, &cfg.train)?;
    let model = prune_dependent(&outcome.model, &cfg.train);

    // Genuine probes.
    let probes: Vec<(&FeatureVector, u32)> = genuine_idx
        .iter()
        .zip(&plan.subjects)
        .flat_map(|(&s, sp)| sp.probe.iter().map(move |&id| (s, id, sp.subject_id)))
        .map(|(s, id, subject)| (lookup(s, id), subject))
        .collect();
    let probe_ranks: Vec<[usize; 4]> = probes
        .par_iter()
        .map(|&(f, truth)| ranks_for(f.as_slice(), truth, &gallery, &model, &norm, &cfg.matcher))
        .collect::<Result<_>>()?;
    let cmc_curves = curves(&probe_ranks, gallery.len())?;

    let forgery_ranks: Vec<[usize; 4]> = forgery_pairs
        .par_iter()
        .map(|&(f, _, victim)| ranks_for(f.as_slice(), victim, &gallery, &model, &norm, &cfg.matcher))
        .collect::<Result<_>>()?;
    let forgery_rank1 = (!forgery_ranks.is_empty()).then(|| {
        let share = |j: usize| forgery_ranks.iter().filter(|r| r[j] == 1).count() as f64 / forgery_ranks.len() as f64;
        RatesBySystem {
            ed: share(0),
            md: share(1),
            ge: share(2),
            fused: share(3),
        }
    });

    Ok(ExperimentReport {
        version: REPORT_VERSION.into(),
        seed,
        corpus: CorpusSummary {
            genuine_subjects: gallery.len(),
            forger_subjects: corpus.forgers().count(),
            samples: corpus.sample_count(),
            genuine_probes: probes.len(),
            forgery_probes: forgery_pairs.len(),
        },
        split: plan,
        fusion: FusionSummary {
            genuine_vectors: genuine_raw.len(),
            impostor_vectors: impostor_raw.len(),
            forgery_vectors: forgery_pairs.len(),
            converged: outcome.converged,
            iterations: outcome.iterations,
            kkt_violation: outcome.violation,
            dual_objective: outcome.objective,
            support_vectors: outcome.model.sv_count(),
            support_vectors_pruned: model.sv_count(),
            bias: model.bias,
            norm,
        },
        rank1: cmc_curves.rank1(),
        forgery_rank1,
        cmc: cmc_curves,
        config: cfg,
        model,
    })
}
