//! Mel-frequency cepstral coefficients.
//!
//! The pipeline is pre-emphasis, Hamming-windowed framing, a zero-padded
//! power spectrum, a triangular mel filterbank, a floored natural log, an
//! orthonormal DCT-II and, optionally, cepstral mean normalization. All
//! arithmetic is `f64`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::fft::power_spectrum;
use crate::audio::AudioClip;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DspError {
    #[error("clip of {len} samples is shorter than one {frame_len}-sample frame")]
    ClipTooShort { len: usize, frame_len: usize },
    #[error("invalid MFCC configuration: {0}")]
    InvalidConfig(String),
    #[error("mel filter {index} is degenerate: adjacent break frequencies share an FFT bin (FFT too small for this many filters)")]
    DegenerateFilter { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub n_mels: usize,
    pub n_coeffs: usize,
    pub pre_emphasis: f64,
    pub fmin: f64,
    /// Upper filterbank edge in Hz; `None` means the Nyquist frequency.
    pub fmax: Option<f64>,
    pub log_floor: f64,
    pub apply_cmn: bool,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            frame_len: 400,
            hop: 160,
            fft_size: 512,
            n_mels: 26,
            n_coeffs: 13,
            pre_emphasis: 0.97,
            fmin: 0.0,
            fmax: None,
            log_floor: 1e-10,
            apply_cmn: true,
        }
    }
}

impl MfccConfig {
    pub fn fmax_for(&self, sample_rate: u32) -> f64 {
        self.fmax.unwrap_or(sample_rate as f64 / 2.0)
    }

    pub fn validate(&self, sample_rate: u32) -> Result<(), DspError> {
        let bad = |msg: String| Err(DspError::InvalidConfig(msg));
        if !self.fft_size.is_power_of_two() {
            return bad(format!("fft_size {} is not a power of two", self.fft_size));
        }
        if self.frame_len == 0 || self.fft_size < self.frame_len {
            return bad(format!(
                "frame_len {} must be in 1..=fft_size {}",
                self.frame_len, self.fft_size
            ));
        }
        if self.hop == 0 {
            return bad("hop must be positive".into());
        }
        if self.n_coeffs == 0 || self.n_coeffs > self.n_mels {
            return bad(format!(
                "n_coeffs {} must be in 1..=n_mels {}",
                self.n_coeffs, self.n_mels
            ));
        }
        if !(0.0..1.0).contains(&self.pre_emphasis) {
            return bad(format!("pre_emphasis {} outside [0, 1)", self.pre_emphasis));
        }
        let fmax = self.fmax_for(sample_rate);
        if !(0.0 <= self.fmin && self.fmin < fmax && fmax <= sample_rate as f64 / 2.0) {
            return bad(format!("need 0 <= fmin ({}) < fmax ({fmax}) <= Nyquist", self.fmin));
        }
        // written negated so that NaN is rejected too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be positive".into());
        }
        Ok(())
    }
}

/// A `frames x coeffs` matrix of cepstral coefficients, stored row-major
/// (one row per frame).
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    values: Vec<f64>,
    frames: usize,
    coeffs: usize,
    frame_hop_seconds: f64,
}

impl MfccMatrix {
    /// # Panics
    ///
    /// Panics if `values.len() != frames * coeffs`.
    pub fn from_rows(values: Vec<f64>, frames: usize, coeffs: usize, frame_hop_seconds: f64) -> Self {
        assert_eq!(
            values.len(),
            frames * coeffs,
            "matrix data does not match {frames}x{coeffs}"
        );
        Self {
            values,
            frames,
            coeffs,
            frame_hop_seconds,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn coeffs(&self) -> usize {
        self.coeffs
    }

    pub fn frame_hop_seconds(&self) -> f64 {
        self.frame_hop_seconds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        &self.values[frame * self.coeffs..(frame + 1) * self.coeffs]
    }

    pub fn get(&self, frame: usize, coeff: usize) -> f64 {
        self.values[frame * self.coeffs + coeff]
    }

    /// CSV dump: a `# frames=T coeffs=C hop_s=H` header, then one line per
    /// frame.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# frames={} coeffs={} hop_s={}\n",
            self.frames, self.coeffs, self.frame_hop_seconds
        );
        for t in 0..self.frames {
            for (c, v) in self.row(t).iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// `y[0] = x[0]`, `y[n] = x[n] - alpha * x[n-1]`.
pub fn pre_emphasize(samples: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    if let Some(&first) = samples.first() {
        out.push(first);
    }
    out.extend(samples.windows(2).map(|w| w[1] - alpha * w[0]));
    out
}

pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
        .collect()
}

/// Number of full frames that fit in `len` samples.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len < frame_len {
        0
    } else {
        1 + (len - frame_len) / hop
    }
}

/// Frames at offsets `0, hop, 2*hop, ...` while a full frame fits, each
/// multiplied by a Hamming window.
pub fn frame_and_window(samples: &[f64], frame_len: usize, hop: usize) -> Result<Vec<Vec<f64>>, DspError> {
    if samples.len() < frame_len || frame_len == 0 {
        return Err(DspError::ClipTooShort {
            len: samples.len(),
            frame_len,
        });
    }
    let window = hamming(frame_len);
    Ok(windowed_frames(samples, &window, hop))
}

fn windowed_frames(samples: &[f64], window: &[f64], hop: usize) -> Vec<Vec<f64>> {
    let count = frame_count(samples.len(), window.len(), hop);
    (0..count)
        .map(|t| {
            let start = t * hop;
            samples[start..start + window.len()]
                .iter()
                .zip(window)
                .map(|(x, w)| x * w)
                .collect()
        })
        .collect()
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters over the one-sided spectrum, `n_mels` rows of
/// `fft_size / 2 + 1` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Vec<f64>,
    n_mels: usize,
    n_bins: usize,
    centers: Vec<usize>,
}

impl MelFilterbank {
    /// Places `n_mels + 2` break frequencies evenly on the mel scale between
    /// `fmin` and `fmax` and snaps each to the nearest FFT bin.
    pub fn new(n_mels: usize, fft_size: usize, sample_rate: u32, fmin: f64, fmax: f64) -> Result<Self, DspError> {
        if n_mels == 0 {
            return Err(DspError::InvalidConfig("n_mels must be positive".into()));
        }
        let n_bins = fft_size / 2 + 1;
        let (mel_lo, mel_hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
        let breaks: Vec<usize> = (0..n_mels + 2)
            .map(|i| {
                let mel = mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64;
                hz_to_bin(mel_to_hz(mel), fft_size, sample_rate).min(n_bins - 1)
            })
            .collect();
        if let Some(index) = breaks.windows(2).position(|w| w[0] == w[1]) {
            return Err(DspError::DegenerateFilter {
                index: index.saturating_sub(1).min(n_mels - 1),
            });
        }

        let mut weights = vec![0.0; n_mels * n_bins];
        for m in 0..n_mels {
            let (left, center, right) = (breaks[m], breaks[m + 1], breaks[m + 2]);
            let row = &mut weights[m * n_bins..(m + 1) * n_bins];
            for (k, w) in row.iter_mut().enumerate().take(center + 1).skip(left) {
                *w = (k - left) as f64 / (center - left) as f64;
            }
            for (k, w) in row.iter_mut().enumerate().take(right + 1).skip(center) {
                *w = (right - k) as f64 / (right - center) as f64;
            }
        }
        Ok(Self {
            weights,
            n_mels,
            n_bins,
            centers: breaks[1..=n_mels].to_vec(),
        })
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    /// Bin index where each filter peaks.
    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    /// Filter energies: the matrix-vector product with a power spectrum.
    pub fn apply(&self, spectrum: &[f64]) -> Vec<f64> {
        assert_eq!(spectrum.len(), self.n_bins);
        (0..self.n_mels)
            .map(|m| self.row(m).iter().zip(spectrum).map(|(w, p)| w * p).sum())
            .collect()
    }
}

fn hz_to_bin(hz: f64, fft_size: usize, sample_rate: u32) -> usize {
    (hz * fft_size as f64 / sample_rate as f64).round() as usize
}

/// Orthonormal DCT-II.
pub fn dct2_ortho(input: &[f64]) -> Vec<f64> {
    let n = input.len();
    let table = DctTable::new(n, n);
    table.apply(input)
}

/// Inverse of [`dct2_ortho`] (the orthonormal DCT-III).
pub fn idct2_ortho(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    let table = DctTable::new(n, n);
    (0..n)
        .map(|i| (0..n).map(|j| table.basis[j * n + i] * coeffs[j]).sum())
        .collect()
}

/// Precomputed scaled cosine basis; row `j` holds `s(j) cos(pi j (2i+1) / 2N)`.
#[derive(Debug, Clone)]
struct DctTable {
    basis: Vec<f64>,
    n: usize,
    keep: usize,
}

impl DctTable {
    fn new(n: usize, keep: usize) -> Self {
        let nf = n as f64;
        let mut basis = Vec::with_capacity(keep * n);
        for j in 0..keep {
            let scale = if j == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            basis.extend((0..n).map(|i| scale * (PI * j as f64 * (2 * i + 1) as f64 / (2.0 * nf)).cos()));
        }
        Self { basis, n, keep }
    }

    fn apply(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.n);
        (0..self.keep)
            .map(|j| {
                self.basis[j * self.n..(j + 1) * self.n]
                    .iter()
                    .zip(input)
                    .map(|(b, x)| b * x)
                    .sum()
            })
            .collect()
    }
}

/// Reusable MFCC front end for one configuration and sample rate. The window,
/// filterbank and DCT basis are built once; extraction takes `&self` so one
/// extractor can serve many threads.
#[derive(Debug, Clone)]
pub struct MfccExtractor {
    config: MfccConfig,
    sample_rate: u32,
    window: Vec<f64>,
    filterbank: MelFilterbank,
    dct: DctTable,
}

impl MfccExtractor {
    pub fn new(config: MfccConfig, sample_rate: u32) -> Result<Self, DspError> {
        config.validate(sample_rate)?;
        let filterbank = MelFilterbank::new(
            config.n_mels,
            config.fft_size,
            sample_rate,
            config.fmin,
            config.fmax_for(sample_rate),
        )?;
        Ok(Self {
            window: hamming(config.frame_len),
            dct: DctTable::new(config.n_mels, config.n_coeffs),
            filterbank,
            sample_rate,
            config,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn extract(&self, clip: &AudioClip) -> Result<MfccMatrix, DspError> {
        self.extract_samples(clip.samples())
    }

    pub fn extract_samples(&self, samples: &[f64]) -> Result<MfccMatrix, DspError> {
        let cfg = &self.config;
        if samples.len() < cfg.frame_len {
            return Err(DspError::ClipTooShort {
                len: samples.len(),
                frame_len: cfg.frame_len,
            });
        }
        let emphasized = pre_emphasize(samples, cfg.pre_emphasis);
        let frames = windowed_frames(&emphasized, &self.window, cfg.hop);

        let mut values = Vec::with_capacity(frames.len() * cfg.n_coeffs);
        for frame in &frames {
            let spectrum = power_spectrum(frame, cfg.fft_size);
            let log_energies: Vec<f64> = self
                .filterbank
                .apply(&spectrum)
                .into_iter()
                .map(|e| e.max(cfg.log_floor).ln())
                .collect();
            values.extend(self.dct.apply(&log_energies));
        }

        let mut matrix = MfccMatrix::from_rows(
            values,
            frames.len(),
            cfg.n_coeffs,
            cfg.hop as f64 / self.sample_rate as f64,
        );
        if cfg.apply_cmn {
            subtract_coefficient_means(&mut matrix);
        }
        Ok(matrix)
    }
}

fn subtract_coefficient_means(m: &mut MfccMatrix) {
    let (frames, coeffs) = (m.frames, m.coeffs);
    for c in 0..coeffs {
        let mean = (0..frames).map(|t| m.values[t * coeffs + c]).sum::<f64>() / frames as f64;
        for t in 0..frames {
            m.values[t * coeffs + c] -= mean;
        }
    }
}

/// One-shot MFCC extraction at the clip's own sample rate.
pub fn mfcc(clip: &AudioClip, config: &MfccConfig) -> Result<MfccMatrix, DspError> {
    MfccExtractor::new(config.clone(), clip.sample_rate())?.extract(clip)
}

/// Truncates to the first `target_frames` frames, or pads with all-zero
/// frames at the end.
///
/// # Panics
///
/// Panics if `target_frames` is zero.
pub fn fit_frames(m: &MfccMatrix, target_frames: usize) -> MfccMatrix {
    assert!(target_frames > 0, "target frame count must be positive");
    let mut values = m.values.clone();
    values.resize(target_frames * m.coeffs, 0.0);
    MfccMatrix {
        values,
        frames: target_frames,
        coeffs: m.coeffs,
        frame_hop_seconds: m.frame_hop_seconds,
    }
}
