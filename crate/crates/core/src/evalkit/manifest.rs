//! JSON corpus manifest with rasters stored as PGM files beside it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusSubject, Sample};
use crate::raster::{read_raster, write_gray_pgm};
use crate::{Error, Result};

pub const MANIFEST_VERSION: &str = "sigfuse-corpus/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSample {
    pub sample_id: u32,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSubject {
    pub subject_id: u32,
    pub genuine: bool,
    #[serde(default)]
    pub forged_victim: Option<u32>,
    pub samples: Vec<ManifestSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub version: String,
    pub subjects: Vec<ManifestSubject>,
}

impl CorpusManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: CorpusManifest = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: format!("unsupported manifest version {:?}", manifest.version),
            });
        }
        Ok(manifest)
    }
}

/// Load a manifest and every raster it lists.
pub fn load_corpus(manifest_path: &Path) -> Result<Corpus> {
    let manifest = CorpusManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let subjects = manifest
        .subjects
        .into_iter()
        .map(|s| {
            let samples = s
                .samples
                .into_iter()
                .map(|m| {
                    Ok(Sample {
                        sample_id: m.sample_id,
                        raster: read_raster(&base.join(&m.path))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CorpusSubject {
                subject_id: s.subject_id,
                genuine: s.genuine,
                forged_victim: s.forged_victim,
                samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let corpus = Corpus { subjects };
    corpus.validate()?;
    Ok(corpus)
}

/// Write every raster as `s{subject:03}_{sample:02}.pgm` into `dir` plus a
/// `manifest.json` referencing them. Returns the manifest path.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut subjects = Vec::with_capacity(corpus.subjects.len());
    for s in &corpus.subjects {
        let mut samples = Vec::with_capacity(s.samples.len());
        for sample in &s.samples {
            let name = PathBuf::from(format!("s{:03}_{:02}.pgm", s.subject_id, sample.sample_id));
            write_gray_pgm(&dir.join(&name), &sample.raster)?;
            samples.push(ManifestSample {
                sample_id: sample.sample_id,
                path: name,
            });
        }
        subjects.push(ManifestSubject {
            subject_id: s.subject_id,
            genuine: s.genuine,
            forged_victim: s.forged_victim,
            samples,
        });
    }
    let manifest = CorpusManifest {
        version: MANIFEST_VERSION.into(),
        subjects,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
