//! Finite-difference check of the hand-written backward pass.

use std::collections::HashSet;

use hangul_coach::dsp::MfccMatrix;
use hangul_coach::siamese::{PairExample, SiameseModel, Tensor, INPUT_COEFFS, INPUT_FRAMES};
use hangul_coach_oracles::central_difference;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
/// Denominator floor for the relative error, so that two gradients that are
/// both zero up to rounding do not produce 0/0.
pub const MAGNITUDE_FLOOR: f64 = 1e-6;

pub fn random_matrix(rng: &mut ChaCha8Rng, scale: f64) -> MfccMatrix {
    let values = (0..INPUT_FRAMES * INPUT_COEFFS)
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    MfccMatrix::from_rows(values, INPUT_FRAMES, INPUT_COEFFS, 0.01)
}

/// A model with every tensor, biases and head included, randomized, so that
/// no gradient is trivially zero.
pub fn random_model(seed: u64) -> SiameseModel {
    let mut model = SiameseModel::init(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for t in [Tensor::Conv1Bias, Tensor::Conv2Bias, Tensor::FcBias] {
        model
            .params_mut()
            .get_mut(t)
            .iter_mut()
            .for_each(|b| *b = rng.random_range(-0.1..0.1));
    }
    model
        .params_mut()
        .get_mut(Tensor::HeadAlpha)
        .iter_mut()
        .for_each(|a| *a = rng.random_range(-0.5..0.5));
    model.params_mut().get_mut(Tensor::HeadBias)[0] = 0.3;
    model
}

pub fn random_batch(seed: u64, len: usize) -> Vec<PairExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|i| PairExample::new(random_matrix(&mut rng, 2.0), random_matrix(&mut rng, 2.0), i % 2 == 0).unwrap())
        .collect()
}

#[derive(Debug, Default)]
pub struct Report {
    pub accepted: usize,
    pub rejected: usize,
    pub max_relative_error: f64,
    pub worst: Option<(Tensor, usize, f64, f64)>,
}

/// Compares analytic and central-difference gradients for `wanted`
/// parameters, visiting tensors in turn. A parameter is skipped when either
/// perturbation changes which ReLUs are active or which pool inputs win.
pub fn check(model: &SiameseModel, batch: &[PairExample], wanted: usize, seed: u64) -> Report {
    let (_, analytic) = model.gradients(batch).unwrap();
    let baseline: Vec<_> = batch.iter().map(|p| model.activation_signature(p)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = model.clone();
    let mut seen = HashSet::new();
    let mut report = Report::default();

    let mut turn = 0usize;
    while report.accepted < wanted {
        let tensor = Tensor::ALL[turn % Tensor::ALL.len()];
        turn += 1;
        let index = rng.random_range(0..tensor.len());
        if !seen.insert((tensor, index)) {
            // every entry of a small tensor already checked
            if seen.len() >= Tensor::ALL.iter().map(|t| t.len()).sum::<usize>() {
                break;
            }
            continue;
        }
        let original = model.params().get(tensor)[index];
        let mut kink = false;
        let numeric = central_difference(
            |x| {
                probe.params_mut().get_mut(tensor)[index] = x;
                kink |= batch
                    .iter()
                    .zip(&baseline)
                    .any(|(p, s)| probe.activation_signature(p) != *s);
                probe.batch_loss(batch).unwrap()
            },
            original,
            STEP,
        );
        probe.params_mut().get_mut(tensor)[index] = original;
        if kink {
            report.rejected += 1;
            continue;
        }
        let a = analytic.get(tensor)[index];
        let error = (a - numeric).abs() / a.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR);
        if error > report.max_relative_error {
            report.max_relative_error = error;
            report.worst = Some((tensor, index, a, numeric));
        }
        report.accepted += 1;
    }
    report
}
