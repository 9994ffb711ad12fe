//! MFCC as one straight-line function.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub sample_rate: u32,
    pub frame_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub n_mels: usize,
    pub n_coeffs: usize,
    pub pre_emphasis: f64,
    pub log_floor: f64,
    pub cmn: bool,
}

impl Params {
    pub fn speech_defaults() -> Self {
        Self {
            sample_rate: 16_000,
            frame_len: 400,
            hop: 160,
            fft_size: 512,
            n_mels: 26,
            n_coeffs: 13,
            pre_emphasis: 0.97,
            log_floor: 1e-10,
            cmn: true,
        }
    }
}

/// Triangular filter weights, one row per filter, over bins `0..=n/2`.
/// Break points are evenly spaced in mel between 0 Hz and Nyquist and
/// rounded to the nearest bin.
pub fn filterbank(p: &Params) -> Vec<Vec<f64>> {
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let hz = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
    let nyquist = p.sample_rate as f64 / 2.0;
    let top = mel(nyquist);
    let bins: Vec<f64> = (0..p.n_mels + 2)
        .map(|i| (hz(top * i as f64 / (p.n_mels + 1) as f64) * p.fft_size as f64 / p.sample_rate as f64).round())
        .collect();
    (0..p.n_mels)
        .map(|m| {
            let (l, c, r) = (bins[m], bins[m + 1], bins[m + 2]);
            (0..=p.fft_size / 2)
                .map(|k| {
                    let k = k as f64;
                    if k >= l && k <= c {
                        (k - l) / (c - l)
                    } else if k > c && k <= r {
                        (r - k) / (r - c)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Frames by coefficients.
pub fn mfcc(samples: &[f64], p: &Params) -> Vec<Vec<f64>> {
    let mut emphasized = vec![0.0; samples.len()];
    for n in 0..samples.len() {
        emphasized[n] = if n == 0 {
            samples[0]
        } else {
            samples[n] - p.pre_emphasis * samples[n - 1]
        };
    }
    let filters = filterbank(p);
    let mut out = Vec::new();
    let mut start = 0;
    while start + p.frame_len <= emphasized.len() {
        let frame: Vec<f64> = (0..p.frame_len)
            .map(|n| {
                let w = 0.54 - 0.46 * (2.0 * PI * n as f64 / (p.frame_len - 1) as f64).cos();
                emphasized[start + n] * w
            })
            .collect();
        let power = super::dft::power_spectrum(&frame, p.fft_size);
        let log_energy: Vec<f64> = filters
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&power)
                    .map(|(w, e)| w * e)
                    .sum::<f64>()
                    .max(p.log_floor)
                    .ln()
            })
            .collect();
        out.push(dct2(&log_energy)[..p.n_coeffs].to_vec());
        start += p.hop;
    }
    if p.cmn && !out.is_empty() {
        for j in 0..p.n_coeffs {
            let mean = out.iter().map(|r| r[j]).sum::<f64>() / out.len() as f64;
            for r in &mut out {
                r[j] -= mean;
            }
        }
    }
    out
}

/// Orthonormal DCT-II by the defining double sum.
pub fn dct2(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    (0..x.len())
        .map(|j| {
            let s = if j == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            s * x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * j as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                .sum::<f64>()
        })
        .collect()
}
