//! Speech input: RIFF/WAVE decoding, resampling and peak normalization.
//!
//! Everything downstream works on [`AudioClip`]s at [`CANONICAL_RATE`], mono,
//! with samples in `[-1.0, 1.0]`.

use thiserror::Error;

/// Sample rate every pipeline stage expects after ingestion.
pub const CANONICAL_RATE: u32 = 16_000;

/// Peak level applied by [`normalize_peak`].
pub const TARGET_PEAK: f64 = 0.95;

const PCM_SCALE: f64 = 32768.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AudioError {
    #[error("malformed RIFF/WAVE container: {0}")]
    MalformedContainer(String),
    #[error("unsupported WAVE format: {0}")]
    UnsupportedFormat(String),
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("invalid clip: {0}")]
    InvalidClip(String),
}

/// Mono PCM samples at a known sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    /// Builds a clip, rejecting a zero rate and samples outside `[-1, 1]`
    /// (including NaN).
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidClip("sample rate must be positive".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
            return Err(AudioError::InvalidClip(format!("sample {bad} outside [-1, 1]")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// 16-bit little-endian PCM encoding of the samples (the same quantization
    /// [`write_wav`] uses).
    pub fn pcm16_le(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.samples.len() * 2);
        for &s in &self.samples {
            out.extend_from_slice(&quantize(s).to_le_bytes());
        }
        out
    }
}

fn quantize(s: f64) -> i16 {
    (s * PCM_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decodes a PCM 16-bit WAV file (mono or stereo). Stereo is downmixed by
/// averaging the two channels.
pub fn load_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    let malformed = |msg: &str| AudioError::MalformedContainer(msg.to_string());
    if bytes.len() < 12 {
        return Err(malformed("file shorter than RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(malformed("missing RIFF magic"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing WAVE form type"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| malformed("chunk extends past end of file"))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(malformed("fmt chunk too short"));
                }
                fmt = Some((
                    read_u16(body, 0),
                    read_u16(body, 2),
                    read_u32(body, 4),
                    read_u16(body, 14),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| malformed("no fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("no data chunk"))?;
    if format != 1 {
        return Err(AudioError::UnsupportedFormat(format!(
            "format code {format}, expected PCM (1)"
        )));
    }
    if bits != 16 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{bits}-bit samples, expected 16"
        )));
    }
    if channels == 0 || channels > 2 {
        return Err(AudioError::UnsupportedFormat(format!("{channels} channels")));
    }
    if rate == 0 {
        return Err(malformed("sample rate of zero"));
    }

    let frame_bytes = 2 * channels as usize;
    let samples: Vec<f64> = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame
                .chunks_exact(2)
                .map(|s| i16::from_le_bytes([s[0], s[1]]) as f64 / PCM_SCALE)
                .sum();
            sum / channels as f64
        })
        .collect();
    if samples.is_empty() {
        return Err(AudioError::EmptyAudio);
    }
    Ok(AudioClip {
        samples,
        sample_rate: rate,
    })
}

/// Encodes a clip as a canonical 44-byte-header mono PCM 16-bit WAV file.
pub fn write_wav(clip: &AudioClip) -> Vec<u8> {
    let pcm = clip.pcm16_le();
    let mut out = Vec::with_capacity(44 + pcm.len());
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + pcm.len() as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(pcm.len() as u32).to_le_bytes());
    out.extend_from_slice(&pcm);
    out
}

/// Linear-interpolation resampling.
///
/// Output sample `i` sits at source position `i * source / target`; positions
/// past the last input sample clamp to it.
///
/// # Panics
///
/// Panics if `target_rate` is zero.
pub fn resample(clip: &AudioClip, target_rate: u32) -> AudioClip {
    assert!(target_rate > 0, "target rate must be positive");
    if target_rate == clip.sample_rate {
        return clip.clone();
    }
    let src = &clip.samples;
    let ratio = clip.sample_rate as f64 / target_rate as f64;
    let out_len = (src.len() as f64 * target_rate as f64 / clip.sample_rate as f64).round() as usize;
    let last = src.len().saturating_sub(1);
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let left = (pos.floor() as usize).min(last);
            let right = (left + 1).min(last);
            let frac = pos - left as f64;
            let frac = if left == last { 0.0 } else { frac };
            (src[left] + (src[right] - src[left]) * frac).clamp(-1.0, 1.0)
        })
        .collect();
    AudioClip {
        samples,
        sample_rate: target_rate,
    }
}

/// Scales the clip so its largest magnitude is [`TARGET_PEAK`]. Silence is
/// returned unchanged.
pub fn normalize_peak(clip: &AudioClip) -> AudioClip {
    let peak = clip.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak == 0.0 || peak == TARGET_PEAK {
        return clip.clone();
    }
    // divide first so the peak sample maps to exactly TARGET_PEAK
    let samples = clip.samples.iter().map(|s| s / peak * TARGET_PEAK).collect();
    AudioClip {
        samples,
        sample_rate: clip.sample_rate,
    }
}

/// The ingestion path shared by the catalog and request handling: decode,
/// resample to [`CANONICAL_RATE`], normalize the peak.
pub fn canonicalize(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    let clip = load_wav(bytes)?;
    Ok(normalize_peak(&resample(&clip, CANONICAL_RATE)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wav_bytes(channels: u16, rate: u32, samples: &[i16]) -> Vec<u8> {
        let data_len = (samples.len() * 2) as u32;
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data_len).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        out.extend_from_slice(&(rate * 2 * channels as u32).to_le_bytes());
        out.extend_from_slice(&(2 * channels).to_le_bytes());
        out.extend_from_slice(&16u16.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&data_len.to_le_bytes());
        for s in samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    #[test]
    fn decodes_canonical_header() {
        let bytes = wav_bytes(1, 16000, &[0, 16384, -16384, 32767]);
        assert_eq!(bytes.len(), 44 + 8);
        let clip = load_wav(&bytes).unwrap();
        assert_eq!(clip.sample_rate(), 16000);
        assert_eq!(clip.samples(), &[0.0, 0.5, -0.5, 32767.0 / 32768.0]);
        assert!((clip.samples()[3] - 0.99997).abs() < 1e-5);
    }

    #[test]
    fn rejects_rifx() {
        let mut bytes = wav_bytes(1, 16000, &[0, 1]);
        bytes[3] = b'X';
        assert!(matches!(load_wav(&bytes), Err(AudioError::MalformedContainer(_))));
    }

    #[test]
    fn stereo_downmix_averages() {
        let bytes = wav_bytes(2, 8000, &[16384, -16384, 16384, -16384]);
        let clip = load_wav(&bytes).unwrap();
        assert_eq!(clip.samples(), &[0.0, 0.0]);
    }

    #[test]
    fn format_errors() {
        let mut float = wav_bytes(1, 16000, &[0]);
        float[20] = 3;
        assert!(matches!(load_wav(&float), Err(AudioError::UnsupportedFormat(_))));

        let mut eight_bit = wav_bytes(1, 16000, &[0]);
        eight_bit[34] = 8;
        assert!(matches!(load_wav(&eight_bit), Err(AudioError::UnsupportedFormat(_))));

        let mut three = wav_bytes(1, 16000, &[0, 0, 0]);
        three[22] = 3;
        assert!(matches!(load_wav(&three), Err(AudioError::UnsupportedFormat(_))));

        assert_eq!(load_wav(&wav_bytes(1, 16000, &[])), Err(AudioError::EmptyAudio));

        let mut truncated = wav_bytes(1, 16000, &[1, 2, 3]);
        truncated.truncate(46);
        assert!(matches!(load_wav(&truncated), Err(AudioError::MalformedContainer(_))));
        assert!(matches!(load_wav(b"not a wav"), Err(AudioError::MalformedContainer(_))));
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = wav_bytes(1, 16000, &[100, -100]);
        let mut bytes = plain[..12].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3, 0]);
        bytes.extend_from_slice(&plain[12..]);
        assert_eq!(load_wav(&bytes).unwrap(), load_wav(&plain).unwrap());
    }

    #[test]
    fn resample_identity_and_ramp() {
        let clip = AudioClip::new(vec![0.1, -0.3, 0.2], 16000).unwrap();
        assert_eq!(resample(&clip, 16000), clip);

        let ramp = AudioClip::new(vec![0.0, 1.0], 2).unwrap();
        let up = resample(&ramp, 4);
        assert_eq!(up.sample_rate(), 4);
        assert_eq!(up.samples(), &[0.0, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn resample_sine_tracks_analytic_signal() {
        use std::f64::consts::PI;
        let src: Vec<f64> = (0..44100)
            .map(|n| (2.0 * PI * 440.0 * n as f64 / 44100.0).sin())
            .collect();
        let clip = AudioClip::new(src, 44100).unwrap();
        let out = resample(&clip, 16000);
        assert!((out.len() as i64 - 16000).abs() <= 1);
        let max_err = out
            .samples()
            .iter()
            .enumerate()
            .map(|(n, s)| (s - (2.0 * PI * 440.0 * n as f64 / 16000.0).sin()).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 0.01, "max error {max_err}");
    }

    #[test]
    fn peak_normalization() {
        let silent = AudioClip::new(vec![0.0; 8], 16000).unwrap();
        assert_eq!(normalize_peak(&silent), silent);

        let clip = AudioClip::new(vec![0.1, -0.2], 16000).unwrap();
        let out = normalize_peak(&clip);
        assert!((out.samples()[0] - 0.475).abs() < 1e-15);
        assert_eq!(out.samples()[1], -0.95);

        let at_peak = AudioClip::new(vec![0.95, -0.475], 16000).unwrap();
        assert_eq!(normalize_peak(&at_peak), at_peak);
    }

    #[test]
    fn clip_invariants() {
        assert!(AudioClip::new(vec![1.5], 16000).is_err());
        assert!(AudioClip::new(vec![f64::NAN], 16000).is_err());
        assert!(AudioClip::new(vec![0.0], 0).is_err());
        let clip = AudioClip::new(vec![0.0; 8000], 16000).unwrap();
        assert_eq!(clip.duration_seconds(), 0.5);
    }
}
