//! Korean pronunciation assessment.
//!
//! A learner's recording is checked two ways against a reference sentence:
//! its transcript is aligned syllable by syllable with the reference text,
//! and its MFCC features are compared with a native recording by a Siamese
//! network. [`assess::Assessor`] wires the stages together.

pub mod assess;
pub mod audio;
pub mod corpus;
pub mod dsp;
pub mod hangul;
pub mod scoring;
pub mod siamese;
pub mod stt;
pub mod synth;

// The guide's listings run as doc-tests, one module per chapter so that a
// failure names its chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/audio-and-mfcc.md")]
    mod audio_and_mfcc {}
    #[doc = include_str!("../../../book/src/hangul-alignment.md")]
    mod hangul_alignment {}
    #[doc = include_str!("../../../book/src/siamese.md")]
    mod siamese {}
    #[doc = include_str!("../../../book/src/speech-to-text.md")]
    mod speech_to_text {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
}
