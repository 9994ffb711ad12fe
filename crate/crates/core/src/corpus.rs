//! The sentence catalog: reference texts with one native recording each and
//! the recording's fitted MFCC matrix, computed once at load.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{canonicalize, AudioError};
use crate::dsp::{fit_frames, DspError, MfccExtractor, MfccMatrix};
use crate::hangul::{tokenize, HangulError};
use crate::siamese::{ModelError, PairExample, INPUT_FRAMES};

pub const MANIFEST_NAME: &str = "sentences.json";
pub const PAIRS_NAME: &str = "pairs.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest {0} not found")]
    MissingManifest(PathBuf),
    #[error("unreadable manifest {path}: {message}")]
    BadManifest { path: PathBuf, message: String },
    #[error("audio for sentence {0} is missing")]
    MissingAudio(String),
    #[error("sentence id {0} appears more than once")]
    DuplicateId(String),
    #[error("sentence {id}: {source}")]
    Audio { id: String, source: AudioError },
    #[error("sentence {id}: {source}")]
    Features { id: String, source: DspError },
    #[error("sentence {id}: {source}")]
    Text { id: String, source: HangulError },
    #[error("training pair {index}: {message}")]
    BadPair { index: usize, message: String },
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub sentence_id: String,
    pub text: String,
    /// Path relative to the catalog directory.
    pub audio: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceEntry {
    pub sentence_id: String,
    pub text: String,
    pub answer_audio_path: PathBuf,
    /// Fitted to the network's input length.
    pub answer_mfcc: MfccMatrix,
}

/// Entries in manifest order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    entries: Vec<ReferenceEntry>,
}

impl Catalog {
    pub fn entries(&self) -> &[ReferenceEntry] {
        &self.entries
    }

    pub fn get(&self, sentence_id: &str) -> Option<&ReferenceEntry> {
        self.entries.iter().find(|e| e.sentence_id == sentence_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>, CorpusError> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|_| CorpusError::MissingManifest(path.clone()))?;
    serde_json::from_str(&text).map_err(|e| CorpusError::BadManifest {
        path,
        message: e.to_string(),
    })
}

/// Loads `dir/sentences.json` and every answer recording it names. Texts
/// must tokenize and ids must be unique.
pub fn load_catalog(dir: &Path, extractor: &MfccExtractor) -> Result<Catalog, CorpusError> {
    let manifest = read_manifest(dir)?;
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(manifest.len());
    for row in manifest {
        if !seen.insert(row.sentence_id.clone()) {
            return Err(CorpusError::DuplicateId(row.sentence_id));
        }
        let id = row.sentence_id;
        tokenize(&row.text).map_err(|source| CorpusError::Text { id: id.clone(), source })?;

        let path = dir.join(&row.audio);
        let bytes = std::fs::read(&path).map_err(|_| CorpusError::MissingAudio(id.clone()))?;
        let clip = canonicalize(&bytes).map_err(|source| CorpusError::Audio { id: id.clone(), source })?;
        let m = extractor
            .extract(&clip)
            .map_err(|source| CorpusError::Features { id: id.clone(), source })?;
        entries.push(ReferenceEntry {
            sentence_id: id,
            text: row.text,
            answer_audio_path: path,
            answer_mfcc: fit_frames(&m, INPUT_FRAMES),
        });
    }
    Ok(Catalog { entries })
}

/// One row of a training manifest. Paths are relative to its directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub a: PathBuf,
    pub b: PathBuf,
    /// 1 for the same utterance, 0 otherwise.
    pub label: u8,
}

/// Loads `dir/pairs.json` and turns every row into a training pair. Each
/// recording is decoded once however many rows name it.
pub fn load_pairs(dir: &Path, extractor: &MfccExtractor) -> Result<Vec<PairExample>, CorpusError> {
    let path = dir.join(PAIRS_NAME);
    let text = std::fs::read_to_string(&path).map_err(|_| CorpusError::MissingManifest(path.clone()))?;
    let rows: Vec<PairEntry> = serde_json::from_str(&text).map_err(|e| CorpusError::BadManifest {
        path,
        message: e.to_string(),
    })?;

    let mut cache: HashMap<PathBuf, MfccMatrix> = HashMap::new();
    let mut features = |index: usize, rel: &Path| -> Result<MfccMatrix, CorpusError> {
        if let Some(m) = cache.get(rel) {
            return Ok(m.clone());
        }
        let bad = |message: String| CorpusError::BadPair {
            index,
            message: format!("{}: {message}", rel.display()),
        };
        let bytes = std::fs::read(dir.join(rel)).map_err(|e| bad(e.to_string()))?;
        let clip = canonicalize(&bytes).map_err(|e| bad(e.to_string()))?;
        let m = fit_frames(&extractor.extract(&clip).map_err(|e| bad(e.to_string()))?, INPUT_FRAMES);
        cache.insert(rel.to_path_buf(), m.clone());
        Ok(m)
    };

    rows.iter()
        .enumerate()
        .map(|(index, row)| {
            if row.label > 1 {
                return Err(CorpusError::BadPair {
                    index,
                    message: format!("label {} is not 0 or 1", row.label),
                });
            }
            let (a, b) = (features(index, &row.a)?, features(index, &row.b)?);
            PairExample::new(a, b, row.label == 1).map_err(|e: ModelError| CorpusError::BadPair {
                index,
                message: e.to_string(),
            })
        })
        .collect()
}
