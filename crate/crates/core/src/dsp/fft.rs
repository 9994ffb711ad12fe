//! In-place iterative radix-2 Cooley-Tukey FFT.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Forward DFT of `buf` in place. `buf.len()` must be a power of two.
///
/// Computes `X[k] = sum_n x[n] e^{-2 pi i k n / N}` with no normalization.
pub fn fft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "FFT length {n} is not a power of two");
    if n <= 1 {
        return;
    }

    // bit-reversal permutation
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = -2.0 * PI / len as f64;
        // Twiddles are evaluated directly rather than by repeated
        // multiplication so the error does not accumulate across a stage.
        let twiddles: Vec<Complex64> = (0..half).map(|k| Complex64::from_polar(1.0, step * k as f64)).collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * twiddles[k];
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// One-sided power spectrum `|X[k]|^2 / fft_size` for `k = 0..=fft_size/2`,
/// with `frame` zero-padded to `fft_size`.
///
/// # Panics
///
/// Panics if `fft_size` is not a power of two or the frame is longer than it.
pub fn power_spectrum(frame: &[f64], fft_size: usize) -> Vec<f64> {
    assert!(
        frame.len() <= fft_size,
        "frame of {} samples exceeds FFT size {fft_size}",
        frame.len()
    );
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for (slot, &x) in buf.iter_mut().zip(frame) {
        slot.re = x;
    }
    fft_in_place(&mut buf);
    let scale = fft_size as f64;
    buf[..=fft_size / 2].iter().map(|c| c.norm_sqr() / scale).collect()
}
