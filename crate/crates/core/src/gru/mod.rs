//! Siamese GRU that scores whether two trajectories share a motion pattern.
//!
//! Both trajectories' per-frame derivatives are fed through the same GRU.
//! The squared distance between the two hidden states at every step forms a
//! vector that a small fully connected head maps to the probability that the
//! pair belongs to different motions.

mod align;
mod checkpoint;
mod model;
mod params;
mod train;

use rayon::prelude::*;
use thiserror::Error;

pub use align::{align_pair, reliable_gt_label, sample_training_pairs, select_window};
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use model::{
    accuracy, batch_loss, encode, gru_step, loss_and_gradients, predict, siamese_forward,
    ForwardCache, StepCache,
};
pub use params::{GruDims, GruParams, INPUT_DIM, TENSOR_NAMES};
pub use train::{train, train_from, Optimizer, TrainConfig, TrainReport};

use crate::affinity::{cost_from_probability, AffinityGraph, SigmaProvider};
use crate::scalar::Scalar;
use crate::tracker::TrajectorySet;

#[derive(Debug, Error, PartialEq)]
pub enum GruError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error(
        "no usable training pairs ({same} same-region, {different} different-region candidates)"
    )]
    NoUsablePairs { same: usize, different: usize },
    #[error("trajectories {a} and {b} share no step")]
    NoOverlap { a: usize, b: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("parameters became non-finite during training")]
    Diverged,
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error("checkpoint io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GruError>;

/// Two derivative sequences of equal length with the training target
/// (0 = same motion, 1 = different).
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair<T> {
    pub xa: Vec<[T; 2]>,
    pub xb: Vec<[T; 2]>,
    pub label: u8,
}

impl<T> AlignedPair<T> {
    pub fn new(xa: Vec<[T; 2]>, xb: Vec<[T; 2]>, label: u8) -> Self {
        Self { xa, xb, label }
    }
}

/// Replaces every edge cost of `graph` with the cost derived from the
/// network's probability that the two trajectories move differently.
pub fn learned_costs<T: Scalar>(
    graph: &AffinityGraph<T>,
    ts: &TrajectorySet<T>,
    p: &GruParams<T>,
    sigma: &impl SigmaProvider<T>,
) -> Result<AffinityGraph<T>> {
    let costs = graph
        .edges()
        .par_iter()
        .map(|e| {
            let (xa, xb) = align_pair(
                &ts.trajectories[e.u],
                &ts.trajectories[e.v],
                p.dims.steps,
                sigma,
            )?;
            Ok(cost_from_probability(predict(
                &AlignedPair::new(xa, xb, 0),
                p,
            )))
        })
        .collect::<Result<Vec<T>>>()?;
    graph
        .with_costs(costs)
        .map_err(|e| GruError::ShapeMismatch(e.to_string()))
}
