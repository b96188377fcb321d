//! Adam and the mini-batch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{br_loss, triclass_loss, Gradients};
use super::{LearnMode, Model, TrainConfig};
use crate::geom::Aabb;
use crate::sample::SampleBatch;
use crate::{Error, Result};

/// Adam with bias correction and decoupled weight decay
/// (`p -= lr·(m̂/(√v̂+ε) + wd·p)`).
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        AdamState { m: vec![0.0; param_count], v: vec![0.0; param_count], t: 0 }
    }

    pub fn step(&mut self, model: &mut Model, grads: &Gradients, cfg: &TrainConfig) {
        debug_assert_eq!(self.m.len(), grads.len());
        self.t += 1;
        let (b1, b2) = cfg.betas;
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        for ((p, g), k) in model.params_mut().zip(grads.iter()).zip(0..) {
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * g;
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * g * g;
            let m_hat = self.m[k] / bc1;
            let v_hat = self.v[k] / bc2;
            *p -= cfg.learning_rate * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * *p);
        }
    }
}

/// Inverse-frequency class weights `n / (3·count_c)`; absent classes get
/// weight zero (they never occur, so they never contribute).
pub fn inverse_frequency_weights(labels: &[u8]) -> [f64; 3] {
    let mut counts = [0usize; 3];
    for &l in labels {
        counts[l as usize] += 1;
    }
    let n = labels.len() as f64;
    let mut w = [0.0; 3];
    for c in 0..3 {
        if counts[c] > 0 {
            w[c] = n / (3.0 * counts[c] as f64);
        }
    }
    w
}

/// Fit a model to a sample batch. `domain` is the box queries are
/// normalized against (the field's root cube). Returns the model and the
/// per-epoch mean training loss. Shuffling, init, and batching are all
/// seeded, so identical inputs give bitwise-identical models.
pub fn train(samples: &SampleBatch, domain: Aabb, cfg: &TrainConfig) -> Result<(Model, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no training samples".into()));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::InvalidArgument("batch_size and epochs must be positive".into()));
    }

    let class_weights = if cfg.mode == LearnMode::TriClass && cfg.class_weights {
        Some(inverse_frequency_weights(&samples.labels))
    } else {
        None
    };

    let mut model = Model::init(cfg.mode, &cfg.hidden, cfg.pos_enc, domain, cfg.seed)?;
    let mut adam = AdamState::new(model.param_count());
    // separate stream from the init rng so reordering one never shifts the
    // other
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xda3e_39cb_94b9_5bdb);

    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let points: Vec<_> = batch.iter().map(|&i| samples.points[i]).collect();
            let (loss, grads) = match cfg.mode {
                LearnMode::TriClass => {
                    let labels: Vec<u8> = batch.iter().map(|&i| samples.labels[i]).collect();
                    triclass_loss(&model, &points, &labels, class_weights.as_ref())?
                }
                LearnMode::BinaryRegression => {
                    let targets: Vec<f32> = batch.iter().map(|&i| samples.targets[i]).collect();
                    br_loss(&model, &points, &targets)?
                }
            };
            adam.step(&mut model, &grads, cfg);
            epoch_loss += loss * batch.len() as f64;
        }
        epoch_loss /= n as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Diverged { epoch, loss: epoch_loss });
        }
        log.push(epoch_loss);
    }
    Ok((model, log))
}
