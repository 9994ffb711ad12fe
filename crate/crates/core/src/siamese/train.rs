use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, PairExample, ParamSet, SiameseModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 16,
            epochs: 200,
            seed: 42,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    m: ParamSet,
    v: ParamSet,
    steps: i32,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            m: ParamSet::zeros(),
            v: ParamSet::zeros(),
            steps: 0,
        }
    }
}

impl Adam {
    pub fn steps(&self) -> i32 {
        self.steps
    }

    pub fn update(&mut self, params: &mut ParamSet, grads: &ParamSet, cfg: &TrainConfig) {
        self.steps += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.steps);
        let c2 = 1.0 - cfg.beta2.powi(self.steps);
        for (((p, g), m), v) in params
            .values_mut()
            .zip(grads.values())
            .zip(self.m.values_mut())
            .zip(self.v.values_mut())
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
        }
    }
}

/// Owns a model and its optimizer state for the duration of training.
#[derive(Debug, Clone)]
pub struct Trainer {
    model: SiameseModel,
    optimizer: Adam,
    config: TrainConfig,
}

impl Trainer {
    pub fn new(model: SiameseModel, config: TrainConfig) -> Self {
        Self {
            model,
            optimizer: Adam::default(),
            config,
        }
    }

    pub fn model(&self) -> &SiameseModel {
        &self.model
    }

    pub fn into_model(self) -> SiameseModel {
        self.model
    }

    /// One Adam step on the mean BCE of `batch`; returns the loss measured
    /// before the update. A non-finite loss or gradient leaves the model
    /// untouched.
    pub fn step(&mut self, batch: &[PairExample]) -> Result<f64, ModelError> {
        let (loss, grads) = self.model.gradients(batch)?;
        if !loss.is_finite() || !grads.all_finite() {
            return Err(ModelError::NonFiniteLoss {
                epoch: 0,
                history: Vec::new(),
            });
        }
        self.optimizer.update(&mut self.model.params, &grads, &self.config);
        Ok(loss)
    }
}

/// Trains for `config.epochs` epochs, reshuffling the data each epoch with a
/// generator seeded from `config.seed`. Returns the model and the mean pair
/// loss of every epoch.
pub fn train(
    model: SiameseModel,
    dataset: &[PairExample],
    config: &TrainConfig,
) -> Result<(SiameseModel, Vec<f64>), ModelError> {
    train_with(model, dataset, config, |_, _| {})
}

/// [`train`] with a callback invoked after every epoch with
/// `(epoch, mean loss)`.
pub fn train_with(
    model: SiameseModel,
    dataset: &[PairExample],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<(SiameseModel, Vec<f64>), ModelError> {
    if config.epochs == 0 {
        return Ok((model, Vec::new()));
    }
    if dataset.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let batch_size = config.batch_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trainer = Trainer::new(model, config.clone());
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut batch = Vec::with_capacity(batch_size);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut weighted_loss = 0.0;
        for chunk in order.chunks(batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| dataset[i].clone()));
            match trainer.step(&batch) {
                Ok(loss) => weighted_loss += loss * chunk.len() as f64,
                Err(ModelError::NonFiniteLoss { .. }) => {
                    return Err(ModelError::NonFiniteLoss { epoch, history });
                }
                Err(e) => return Err(e),
            }
        }
        let mean = weighted_loss / dataset.len() as f64;
        history.push(mean);
        on_epoch(epoch, mean);
    }
    Ok((trainer.into_model(), history))
}
