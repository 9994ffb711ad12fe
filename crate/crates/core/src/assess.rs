//! The assessment pipeline shared by the command line and the HTTP service:
//! decode, transcribe, diff against the reference text, and score the clip
//! against the reference recording.

use thiserror::Error;

use crate::audio::{canonicalize, AudioClip, AudioError};
use crate::corpus::{Catalog, ReferenceEntry};
use crate::dsp::{fit_frames, DspError, MfccExtractor};
use crate::hangul::{align, highlight, HangulError, HighlightedDiff};
use crate::scoring::{Level, LevelBands, ScoringError};
use crate::siamese::{ModelError, SiameseModel, INPUT_FRAMES};
use crate::stt::{SttError, Transcriber, Transcript};

#[derive(Debug, Error)]
pub enum AssessError {
    #[error("unknown sentence id {0:?}")]
    UnknownSentence(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Stt(#[from] SttError),
    #[error(transparent)]
    Alignment(#[from] HangulError),
    #[error(transparent)]
    Features(#[from] DspError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

impl AssessError {
    /// Pipeline stage that failed, for operator-facing messages.
    pub fn stage(&self) -> &'static str {
        match self {
            AssessError::UnknownSentence(_) => "catalog",
            AssessError::Audio(_) => "audio",
            AssessError::Stt(_) => "stt",
            AssessError::Alignment(_) => "align",
            AssessError::Features(_) => "mfcc",
            AssessError::Model(_) => "similarity",
            AssessError::Scoring(_) => "scoring",
        }
    }

    /// Name of the underlying error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            AssessError::UnknownSentence(_) => "UnknownSentence",
            AssessError::Audio(_) => "MalformedAudio",
            AssessError::Stt(e) => e.kind(),
            AssessError::Alignment(HangulError::UnsupportedCharacter { .. }) => "UnsupportedCharacter",
            AssessError::Alignment(_) => "AlignmentFailure",
            AssessError::Features(DspError::ClipTooShort { .. }) => "ClipTooShort",
            AssessError::Features(_) => "FeatureFailure",
            AssessError::Model(_) => "ModelFailure",
            AssessError::Scoring(ScoringError::StorageFailure(_)) => "StorageFailure",
            AssessError::Scoring(_) => "ScoringFailure",
        }
    }
}

/// Everything computed for one clip, before anything is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub sentence_id: String,
    pub reference_text: String,
    pub transcript: Transcript,
    pub diff: HighlightedDiff,
    /// Total alignment cost between reference and transcript.
    pub total_cost: f64,
    pub similarity: f64,
    pub level: Level,
}

/// Immutable pipeline state; share it freely between threads.
pub struct Assessor {
    pub catalog: Catalog,
    pub model: SiameseModel,
    pub extractor: MfccExtractor,
    pub stt: Box<dyn Transcriber>,
    pub bands: LevelBands,
}

impl Assessor {
    pub fn reference(&self, sentence_id: &str) -> Result<&ReferenceEntry, AssessError> {
        self.catalog
            .get(sentence_id)
            .ok_or_else(|| AssessError::UnknownSentence(sentence_id.to_string()))
    }

    /// Runs the pipeline on uploaded WAV bytes.
    pub fn evaluate(&self, sentence_id: &str, wav: &[u8]) -> Result<Evaluation, AssessError> {
        let reference = self.reference(sentence_id)?;
        let clip = canonicalize(wav)?;
        self.evaluate_clip(reference, &clip)
    }

    /// Runs the pipeline on a clip that is already canonical (16 kHz,
    /// peak-normalized).
    pub fn evaluate_clip(&self, reference: &ReferenceEntry, clip: &AudioClip) -> Result<Evaluation, AssessError> {
        // a clip too short for one analysis frame cannot be scored; say so
        // before paying for transcription
        let frame_len = self.extractor.config().frame_len;
        if clip.len() < frame_len {
            return Err(DspError::ClipTooShort {
                len: clip.len(),
                frame_len,
            }
            .into());
        }
        let transcript = self.stt.transcribe(clip)?;
        let script = align(&reference.text, &transcript.text)?;
        let diff = highlight(&script, &reference.text, &transcript.text)?;

        let features = fit_frames(&self.extractor.extract(clip)?, INPUT_FRAMES);
        let similarity = self.model.similarity(&features, &reference.answer_mfcc)?;
        let level = self.bands.level_of(similarity)?;
        Ok(Evaluation {
            sentence_id: reference.sentence_id.clone(),
            reference_text: reference.text.clone(),
            transcript,
            diff,
            total_cost: script.total_cost,
            similarity,
            level,
        })
    }
}
