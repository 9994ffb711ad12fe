use std::f64::consts::PI;

/// Full two-sided DFT of a real sequence, `(re, im)` per bin.
pub fn dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &v) in x.iter().enumerate() {
                // reduce k*t mod n first so the angle stays small and accurate
                let angle = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re += v * angle.cos();
                im += v * angle.sin();
            }
            (re, im)
        })
        .collect()
}

/// `|X[k]|^2 / n` for `k = 0..=n/2`, with `frame` zero-padded to `n`.
pub fn power_spectrum(frame: &[f64], n: usize) -> Vec<f64> {
    let mut padded = frame.to_vec();
    padded.resize(n, 0.0);
    dft(&padded)
        .into_iter()
        .take(n / 2 + 1)
        .map(|(re, im)| (re * re + im * im) / n as f64)
        .collect()
}
