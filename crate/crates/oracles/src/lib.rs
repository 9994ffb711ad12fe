//! Reference implementations written for clarity rather than speed. None of
//! this code shares anything with `hangul-coach`: each function restates its
//! definition directly (quadratic DFTs, explicit sums, exhaustive search) so
//! that tests can compare the fast paths against it.

pub mod dft;
pub mod edit;
pub mod mfcc;
pub mod rank;
pub mod shapes;

/// Central finite difference `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
