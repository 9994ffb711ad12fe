//! Deterministic synthetic audio: tone-burst clips for the two-class toy
//! training corpus, and a crude formant synthesizer that turns Hangul text
//! into speech-like clips for fixtures and demos.
//!
//! Nothing here models real speech closely. It exists so that every pipeline
//! stage can be exercised offline with reproducible inputs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{AudioClip, CANONICAL_RATE};
use crate::dsp::{fit_frames, MfccExtractor};
use crate::hangul::decompose;
use crate::siamese::{ModelError, PairExample, INPUT_FRAMES};

const RATE: f64 = CANONICAL_RATE as f64;

/// A 1 s clip with three bursts of a tone near `freq_hz`. Frequency,
/// amplitude, burst length and onset are jittered per `seed`; a faint noise floor
/// keeps the gaps from being digital silence.
pub fn tone_bursts(freq_hz: f64, seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = CANONICAL_RATE as usize;
    let mut samples: Vec<f64> = (0..len).map(|_| rng.random_range(-1e-3..1e-3)).collect();

    let freq = freq_hz * rng.random_range(0.98..1.02);
    let slot = len / 3;
    for k in 0..3 {
        let burst = rng.random_range(0.15..0.20) * RATE;
        // onsets wander up to 25 ms either side of 80 ms into each third
        let start = k * slot + ((0.08 + rng.random_range(-0.025..0.025)) * RATE) as usize;
        let amp = rng.random_range(0.5..0.9);
        let phase = rng.random_range(0.0..2.0 * PI);
        let n = burst as usize;
        for i in 0..n {
            // 5 ms raised-cosine ramps avoid clicks
            let ramp = ((i.min(n - 1 - i)) as f64 / (0.005 * RATE)).min(1.0);
            let env = 0.5 - 0.5 * (PI * ramp).cos();
            samples[start + i] += amp * env * (2.0 * PI * freq * i as f64 / RATE + phase).sin();
        }
    }
    for s in &mut samples {
        *s = s.clamp(-1.0, 1.0);
    }
    AudioClip::new(samples, CANONICAL_RATE).expect("synthesized samples are in range")
}

/// The two-class toy corpus: `per_class` clips of 440 Hz bursts (class 0)
/// followed by `per_class` clips of 880 Hz bursts (class 1).
pub fn toy_corpus(per_class: usize, seed: u64) -> Vec<(AudioClip, usize)> {
    let mut out = Vec::with_capacity(2 * per_class);
    for (class, freq) in [(0, 440.0), (1, 880.0)] {
        for i in 0..per_class {
            let clip_seed = seed
                .wrapping_mul(1_000_003)
                .wrapping_add((class * per_class + i) as u64);
            out.push((tone_bursts(freq, clip_seed), class));
        }
    }
    out
}

/// Training pairs over a labelled set of fitted MFCC matrices: each example
/// is paired `per_example` times with a random other member of its own class
/// (positive) and as often with a random member of another class (negative).
pub fn balanced_pairs(
    examples: &[(crate::dsp::MfccMatrix, usize)],
    per_example: usize,
    seed: u64,
) -> Result<Vec<PairExample>, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(2 * per_example * examples.len());
    for (i, (m, class)) in examples.iter().enumerate() {
        let same: Vec<usize> = (0..examples.len())
            .filter(|&j| j != i && examples[j].1 == *class)
            .collect();
        let other: Vec<usize> = (0..examples.len()).filter(|&j| examples[j].1 != *class).collect();
        for _ in 0..per_example {
            if let Some(&j) = pick(&mut rng, &same) {
                pairs.push(PairExample::new(m.clone(), examples[j].0.clone(), true)?);
            }
            if let Some(&j) = pick(&mut rng, &other) {
                pairs.push(PairExample::new(m.clone(), examples[j].0.clone(), false)?);
            }
        }
    }
    Ok(pairs)
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.random_range(0..items.len())])
    }
}

/// Toy corpus features: every clip run through `extractor` and fitted to
/// the network's input length.
pub fn toy_features(extractor: &MfccExtractor, per_class: usize, seed: u64) -> Vec<(crate::dsp::MfccMatrix, usize)> {
    toy_corpus(per_class, seed)
        .into_iter()
        .map(|(clip, class)| {
            let m = extractor.extract(&clip).expect("toy clips are longer than one frame");
            (fit_frames(&m, INPUT_FRAMES), class)
        })
        .collect()
}

/// Speaker settings for [`synthesize_utterance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voice {
    /// Fundamental frequency in Hz.
    pub pitch_hz: f64,
    /// Vowel length in seconds.
    pub vowel_seconds: f64,
    /// Noise seed for consonant bursts.
    pub seed: u64,
}

impl Default for Voice {
    fn default() -> Self {
        Self {
            pitch_hz: 140.0,
            vowel_seconds: 0.09,
            seed: 1,
        }
    }
}

// (F1, F2) in Hz, in Unicode vowel order ㅏ ㅐ ㅑ ㅒ ㅓ ㅔ ㅕ ㅖ ㅗ ㅘ ㅙ ㅚ ㅛ ㅜ ㅝ ㅞ ㅟ ㅠ ㅡ ㅢ ㅣ
const VOWEL_FORMANTS: [(f64, f64); 21] = [
    (800.0, 1200.0),
    (650.0, 1750.0),
    (800.0, 1300.0),
    (650.0, 1800.0),
    (600.0, 1000.0),
    (500.0, 1850.0),
    (600.0, 1100.0),
    (500.0, 1900.0),
    (450.0, 800.0),
    (750.0, 1150.0),
    (600.0, 1700.0),
    (450.0, 1800.0),
    (450.0, 850.0),
    (350.0, 800.0),
    (550.0, 1000.0),
    (500.0, 1800.0),
    (350.0, 1900.0),
    (350.0, 900.0),
    (400.0, 1400.0),
    (350.0, 2000.0),
    (300.0, 2200.0),
];

/// Renders Hangul text as a sequence of noise bursts (consonants) and
/// two-formant harmonic vowels. Whitespace becomes a short pause; other
/// non-syllable characters are skipped. The result is peak-normalized to
/// 0.8.
pub fn synthesize_utterance(text: &str, voice: Voice) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(voice.seed);
    let mut out: Vec<f64> = vec![0.0; (0.05 * RATE) as usize];
    for ch in text.chars() {
        if ch.is_whitespace() {
            out.extend(std::iter::repeat_n(0.0, (0.06 * RATE) as usize));
            continue;
        }
        let Ok(s) = decompose(ch) else { continue };
        // ㅇ (lead 11) is silent in onset position
        if s.lead != 11 {
            consonant(&mut out, s.lead as usize, 0.025, &mut rng);
        }
        vowel(&mut out, VOWEL_FORMANTS[s.vowel as usize], voice);
        if s.tail != 0 {
            consonant(&mut out, s.tail as usize, 0.02, &mut rng);
        }
    }
    out.extend(std::iter::repeat_n(0.0, (0.05 * RATE) as usize));

    let peak = out.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        for s in &mut out {
            *s = *s / peak * 0.8;
        }
    }
    AudioClip::new(out, CANONICAL_RATE).expect("normalized samples are in range")
}

fn consonant(out: &mut Vec<f64>, index: usize, seconds: f64, rng: &mut ChaCha8Rng) {
    // a one-pole filter whose coefficient depends on the consonant colours
    // the noise from dark to bright
    let pole = -0.9 + 1.8 * (index % 19) as f64 / 18.0;
    let n = (seconds * RATE) as usize;
    let mut prev = 0.0;
    for i in 0..n {
        let white: f64 = rng.random_range(-1.0..1.0);
        prev = white + pole * prev;
        let env = (PI * i as f64 / n as f64).sin();
        out.push(0.15 * env * prev);
    }
}

fn vowel(out: &mut Vec<f64>, (f1, f2): (f64, f64), voice: Voice) {
    let n = (voice.vowel_seconds * RATE) as usize;
    let f0 = voice.pitch_hz;
    let harmonics: Vec<(f64, f64)> = (1..)
        .map(|h| h as f64 * f0)
        .take_while(|&f| f < 4000.0)
        .map(|f| {
            let gain = resonance(f, f1, 80.0) + 0.6 * resonance(f, f2, 120.0);
            (f, gain)
        })
        .collect();
    for i in 0..n {
        let t = i as f64 / RATE;
        let env = (PI * i as f64 / n as f64).sin().powf(0.5);
        let v: f64 = harmonics.iter().map(|&(f, g)| g * (2.0 * PI * f * t).sin()).sum();
        out.push(0.3 * env * v);
    }
}

fn resonance(f: f64, center: f64, bandwidth: f64) -> f64 {
    1.0 / (1.0 + ((f - center) / bandwidth).powi(2))
}
