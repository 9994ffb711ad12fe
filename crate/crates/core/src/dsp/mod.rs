//! Speech-to-MFCC signal processing.

pub mod fft;
pub mod mfcc;

pub use fft::{fft_in_place, power_spectrum};
pub use mfcc::{
    dct2_ortho, fit_frames, frame_and_window, frame_count, hamming, hz_to_mel, idct2_ortho, mel_to_hz, mfcc,
    pre_emphasize, DspError, MelFilterbank, MfccConfig, MfccExtractor, MfccMatrix,
};
