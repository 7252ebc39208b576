use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{batch_loss, loss_and_gradients};
use super::params::{GruDims, GruParams};
use super::{AlignedPair, GruError, Result};
use crate::scalar::Scalar;

/// Parameter update rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    /// Heavy-ball SGD.
    Momentum { momentum: f64 },
    /// Adam with the usual bias correction.
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn sgd_momentum() -> Self {
        Optimizer::Momentum { momentum: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub dims: GruDims,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub optimizer: Optimizer,
    /// Initial parameters are drawn from `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dims: GruDims::default(),
            epochs: 3,
            lr: 0.001,
            batch: 256,
            optimizer: Optimizer::adam(),
            init_scale: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    pub params: GruParams<T>,
    /// Mean squared error over the whole training set after each epoch.
    pub epoch_losses: Vec<T>,
}

/// Mini-batch training from a seeded uniform initialization.
pub fn train<T: Scalar>(pairs: &[AlignedPair<T>], cfg: &TrainConfig) -> Result<TrainReport<T>> {
    let init = GruParams::uniform(cfg.dims, cfg.init_scale, cfg.seed);
    train_from(pairs, init, cfg)
}

/// Like [`train`] but starting from given parameters.
pub fn train_from<T: Scalar>(
    pairs: &[AlignedPair<T>],
    mut params: GruParams<T>,
    cfg: &TrainConfig,
) -> Result<TrainReport<T>> {
    if pairs.is_empty() {
        return Err(GruError::EmptyTrainingSet);
    }
    if let Some(p) = pairs
        .iter()
        .find(|p| p.xa.len() != cfg.dims.steps || p.xb.len() != cfg.dims.steps)
    {
        return Err(GruError::ShapeMismatch(format!(
            "pair of length {}/{} for {} steps",
            p.xa.len(),
            p.xb.len(),
            cfg.dims.steps
        )));
    }
    // shuffling stream is separate from the initialization stream
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed_5eed_5eed);
    let lr = T::lit(cfg.lr);
    let mut first = GruParams::zeros(cfg.dims);
    let mut second = GruParams::zeros(cfg.dims);
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch.max(1)) {
            let batch: Vec<AlignedPair<T>> = chunk.iter().map(|&i| pairs[i].clone()).collect();
            let (_, grads) = loss_and_gradients(&batch, &params);
            step += 1;
            match cfg.optimizer {
                Optimizer::Momentum { momentum } => {
                    let mu = T::lit(momentum);
                    for (v, g) in first.tensors_mut().into_iter().zip(grads.tensors()) {
                        for (vi, gi) in v.iter_mut().zip(g) {
                            *vi = mu * *vi + *gi;
                        }
                    }
                    params.axpy(-lr, &first);
                }
                Optimizer::Adam { beta1, beta2, eps } => {
                    let (b1, b2, eps) = (T::lit(beta1), T::lit(beta2), T::lit(eps));
                    let c1 = T::one() - b1.powi(step);
                    let c2 = T::one() - b2.powi(step);
                    let g_all = grads.tensors();
                    let m_all = first.tensors_mut();
                    let v_all = second.tensors_mut();
                    let p_all = params.tensors_mut();
                    for (((p, m), v), g) in p_all.into_iter().zip(m_all).zip(v_all).zip(g_all) {
                        for i in 0..p.len() {
                            m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                            v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                            let mhat = m[i] / c1;
                            let vhat = v[i] / c2;
                            p[i] -= lr * mhat / (vhat.sqrt() + eps);
                        }
                    }
                }
            }
        }
        let loss = batch_loss(pairs, &params);
        log::info!("gru epoch {}: mse {loss}", epoch_losses.len() + 1);
        epoch_losses.push(loss);
    }
    if !params.is_finite() {
        return Err(GruError::Diverged);
    }
    Ok(TrainReport {
        params,
        epoch_losses,
    })
}
