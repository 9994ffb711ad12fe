//! Twin convolutional network scoring the acoustic similarity of two MFCC
//! matrices.
//!
//! Both inputs go through the *same* embedding network (there is one copy of
//! the weights), the head takes a learned weighted L1 distance between the two
//! embeddings and squashes it with a sigmoid:
//!
//! ```text
//! p = sigmoid( sum_j alpha_j * |e(a)_j - e(b)_j| + b )
//! ```
//!
//! An input is a 200-frame, 13-coefficient matrix read as a one-channel
//! 13 x 200 image. The embedding stack is
//!
//! | stage                       | output shape |
//! |-----------------------------|--------------|
//! | input                       | 1 x 13 x 200 |
//! | conv 3x7, stride 1, ReLU    | 8 x 11 x 194 |
//! | max-pool 2x2                | 8 x 5 x 97   |
//! | conv 3x5, stride 1, ReLU    | 16 x 3 x 93  |
//! | max-pool 2x2                | 16 x 1 x 46  |
//! | flatten                     | 736          |
//! | dense + sigmoid             | 64           |
//!
//! Training minimizes binary cross-entropy with Adam; gradients are computed
//! by hand and the two twins' contributions are summed into the shared
//! parameters.

mod io;
mod net;
mod train;

pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use net::{bce_loss, sigmoid, ActivationSignature};
pub use train::{train, train_with, Adam, TrainConfig, Trainer};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsp::MfccMatrix;

pub const INPUT_FRAMES: usize = 200;
pub const INPUT_COEFFS: usize = 13;
pub const EMBEDDING_DIM: usize = 64;
pub const FLAT_DIM: usize = 736;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("expected a {expected_frames}x{expected_coeffs} MFCC matrix, got {frames}x{coeffs}")]
    ShapeMismatch {
        expected_frames: usize,
        expected_coeffs: usize,
        frames: usize,
        coeffs: usize,
    },
    #[error("non-finite loss or gradient at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, history: Vec<f64> },
    #[error("empty training batch")]
    EmptyBatch,
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("model file is truncated")]
    TruncatedFile,
    #[error("model file is corrupt: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identifies one parameter tensor of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tensor {
    Conv1Weight,
    Conv1Bias,
    Conv2Weight,
    Conv2Bias,
    FcWeight,
    FcBias,
    HeadAlpha,
    HeadBias,
}

impl Tensor {
    /// Serialization order.
    pub const ALL: [Tensor; 8] = [
        Tensor::Conv1Weight,
        Tensor::Conv1Bias,
        Tensor::Conv2Weight,
        Tensor::Conv2Bias,
        Tensor::FcWeight,
        Tensor::FcBias,
        Tensor::HeadAlpha,
        Tensor::HeadBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tensor::Conv1Weight => "conv1.w",
            Tensor::Conv1Bias => "conv1.b",
            Tensor::Conv2Weight => "conv2.w",
            Tensor::Conv2Bias => "conv2.b",
            Tensor::FcWeight => "fc.w",
            Tensor::FcBias => "fc.b",
            Tensor::HeadAlpha => "head.alpha",
            Tensor::HeadBias => "head.b",
        }
    }

    pub fn dims(self) -> &'static [usize] {
        match self {
            Tensor::Conv1Weight => &[8, 3, 7],
            Tensor::Conv1Bias => &[8],
            Tensor::Conv2Weight => &[16, 8, 3, 5],
            Tensor::Conv2Bias => &[16],
            Tensor::FcWeight => &[FLAT_DIM, EMBEDDING_DIM],
            Tensor::FcBias => &[EMBEDDING_DIM],
            Tensor::HeadAlpha => &[EMBEDDING_DIM],
            Tensor::HeadBias => &[],
        }
    }

    // no tensor is empty; the head bias is a scalar of length one
    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        self.dims().iter().product()
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// One value per model parameter, grouped by [`Tensor`]. Used for the
/// weights themselves, their gradients and the optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    tensors: [Vec<f64>; 8],
}

impl ParamSet {
    pub fn zeros() -> Self {
        Self {
            tensors: Tensor::ALL.map(|t| vec![0.0; t.len()]),
        }
    }

    pub fn get(&self, t: Tensor) -> &[f64] {
        &self.tensors[t.index()]
    }

    pub fn get_mut(&mut self, t: Tensor) -> &mut [f64] {
        &mut self.tensors[t.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Tensor, &[f64])> + '_ {
        Tensor::ALL.into_iter().map(move |t| (t, self.get(t)))
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(Vec::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|v| v.is_finite())
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.tensors.iter_mut().flatten()
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.tensors.iter().flatten()
    }
}

/// A pair of fitted MFCC matrices and whether they should count as similar.
#[derive(Debug, Clone, PartialEq)]
pub struct PairExample {
    pub a: MfccMatrix,
    pub b: MfccMatrix,
    pub similar: bool,
}

impl PairExample {
    pub fn new(a: MfccMatrix, b: MfccMatrix, similar: bool) -> Result<Self, ModelError> {
        check_shape(&a)?;
        check_shape(&b)?;
        Ok(Self { a, b, similar })
    }

    pub fn label(&self) -> f64 {
        if self.similar {
            1.0
        } else {
            0.0
        }
    }
}

pub(crate) fn check_shape(m: &MfccMatrix) -> Result<(), ModelError> {
    if m.frames() != INPUT_FRAMES || m.coeffs() != INPUT_COEFFS {
        return Err(ModelError::ShapeMismatch {
            expected_frames: INPUT_FRAMES,
            expected_coeffs: INPUT_COEFFS,
            frames: m.frames(),
            coeffs: m.coeffs(),
        });
    }
    Ok(())
}

/// The twin network's single set of weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SiameseModel {
    params: ParamSet,
}

impl SiameseModel {
    /// Xavier-uniform weights (`r = sqrt(6 / (fan_in + fan_out))` per
    /// tensor), zero biases, head alpha all one and head bias zero.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::zeros();
        for t in [Tensor::Conv1Weight, Tensor::Conv2Weight, Tensor::FcWeight] {
            let r = xavier_bound(t);
            for w in params.get_mut(t) {
                *w = rng.random_range(-r..r);
            }
        }
        params.get_mut(Tensor::HeadAlpha).fill(1.0);
        Self { params }
    }

    /// Builds a model from explicit parameters.
    pub fn from_params(params: ParamSet) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn head_bias(&self) -> f64 {
        self.params.get(Tensor::HeadBias)[0]
    }

    /// Embedding of one 200x13 matrix; every component lies in (0, 1).
    pub fn embed(&self, m: &MfccMatrix) -> Result<Vec<f64>, ModelError> {
        check_shape(m)?;
        Ok(net::forward(&self.params, m.values()).embedding)
    }

    /// Similarity probability of two 200x13 matrices.
    pub fn similarity(&self, a: &MfccMatrix, b: &MfccMatrix) -> Result<f64, ModelError> {
        check_shape(a)?;
        check_shape(b)?;
        let ea = net::forward(&self.params, a.values()).embedding;
        let eb = net::forward(&self.params, b.values()).embedding;
        Ok(net::head(&self.params, &ea, &eb).1)
    }

    /// Mean binary cross-entropy over a batch.
    pub fn batch_loss(&self, batch: &[PairExample]) -> Result<f64, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let mut total = 0.0;
        for pair in batch {
            let ea = net::forward(&self.params, pair.a.values()).embedding;
            let eb = net::forward(&self.params, pair.b.values()).embedding;
            total += bce_loss(net::head(&self.params, &ea, &eb).1, pair.label());
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean batch loss and its gradient with respect to every parameter.
    pub fn gradients(&self, batch: &[PairExample]) -> Result<(f64, ParamSet), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        Ok(net::batch_gradients(&self.params, batch))
    }

    /// ReLU sign patterns, pool winners and head distance signs for a pair.
    /// Two parameter settings with equal signatures lie in the same smooth
    /// region of the loss.
    pub fn activation_signature(&self, pair: &PairExample) -> ActivationSignature {
        net::signature(&self.params, pair)
    }
}

fn xavier_bound(t: Tensor) -> f64 {
    let (fan_in, fan_out) = match t {
        Tensor::Conv1Weight => (3 * 7, 8 * 3 * 7),
        Tensor::Conv2Weight => (8 * 3 * 5, 16 * 3 * 5),
        Tensor::FcWeight => (FLAT_DIM, EMBEDDING_DIM),
        _ => unreachable!("only weight tensors are randomly initialized"),
    };
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
