//! Triplet hinge training of the execution engine.

mod backward;
mod optim;

pub use backward::{backward, batch_backward, batch_loss, cosine_with_grad, graph_backward, hinge_loss, hinge_with_grad};
pub use optim::{Optimizer, OptimizerKind};

use std::path::PathBuf;

use thiserror::Error;

use crate::clonecli::{CloneDataset, PairMode, Split};
use crate::eventgraph::EventDependencyGraph;
use crate::model::{save_checkpoint, ModelConfig, ModelError, ModelParams};
use crate::numkernel::{ParamSet, Rng};

/// The constant inside the hinge.
pub const MARGIN: f64 = 1.0;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("vector norm below 1e-12; cosine similarity undefined")]
    DegenerateVector,
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// An anchor, a same-problem positive and a cross-problem negative, as
/// fragment indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Triplets per parameter update.
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub margin: f64,
    pub negatives_per_anchor: usize,
    pub pair_mode: PairMode,
    /// Overwritten with the current parameters after every epoch.
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 10,
            batch_size: 32,
            seed: 0,
            optimizer: OptimizerKind::Sgd,
            margin: MARGIN,
            negatives_per_anchor: 1,
            pair_mode: PairMode::Unordered,
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!("learning rate {} must be finite and non-negative", self.learning_rate)));
        }
        if self.margin != MARGIN {
            return Err(TrainError::Config(format!("margin is fixed at {MARGIN}")));
        }
        if self.batch_size == 0 || self.negatives_per_anchor == 0 {
            return Err(TrainError::Config("batch size and negatives per anchor must be positive".into()));
        }
        Ok(())
    }
}

/// `count` fragments drawn uniformly (with replacement) from those whose
/// label differs from the anchor's, restricted to `pool`.
pub fn sample_negatives(
    dataset: &CloneDataset,
    pool: &[usize],
    anchor: usize,
    rng: &mut Rng,
    count: usize,
) -> Result<Vec<usize>, TrainError> {
    let label = &dataset.fragments[anchor].label;
    let others: Vec<usize> = pool.iter().copied().filter(|&i| &dataset.fragments[i].label != label).collect();
    if others.is_empty() {
        return Err(TrainError::Dataset(format!("no fragment outside label `{label}` to sample a negative from")));
    }
    Ok((0..count).map(|_| others[rng.below(others.len())]).collect())
}

/// One epoch's triplets in a seeded random order.
pub fn epoch_triplets(
    dataset: &CloneDataset,
    pool: &[usize],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<Vec<Triplet>, TrainError> {
    let mut out = Vec::new();
    for (anchor, positive) in dataset.positive_pairs(pool, cfg.pair_mode) {
        for negative in sample_negatives(dataset, pool, anchor, rng, cfg.negatives_per_anchor)? {
            out.push(Triplet { anchor, positive, negative });
        }
    }
    rng.shuffle(&mut out);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean batch loss of each epoch, measured before each update.
    pub losses: Vec<f64>,
}

/// Trains from a fresh seeded initialization on the train split.
pub fn train(dataset: &CloneDataset, model: ModelConfig, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let params = ModelParams::init(model, &mut Rng::new(cfg.seed).fork(1))?;
    train_from(dataset, params, cfg)
}

/// Continues training from `params`.
pub fn train_from(dataset: &CloneDataset, params: ModelParams, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_with(dataset, params, cfg, |_, _, _| {})
}

/// [`train_from`] with a hook called after every epoch with the 1-based
/// epoch number, the current parameters and the epoch's mean loss.
pub fn train_with<F>(dataset: &CloneDataset, mut params: ModelParams, cfg: &TrainConfig, mut on_epoch: F) -> Result<TrainOutcome, TrainError>
where
    F: FnMut(usize, &ModelParams, f64),
{
    cfg.validate()?;
    let pool = dataset.indices(Split::Train);
    let labels: std::collections::BTreeSet<&str> = pool.iter().map(|&i| dataset.fragments[i].label.as_str()).collect();
    if labels.len() < 2 {
        return Err(TrainError::Dataset(format!("training split has {} labels, need 2", labels.len())));
    }
    let graphs: Vec<&EventDependencyGraph> = dataset.fragments.iter().map(|f| &f.graph).collect();
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate, &params);
    let seed_rng = Rng::new(cfg.seed);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = seed_rng.fork(1000 + epoch as u64);
        let triplets = epoch_triplets(dataset, &pool, cfg, &mut rng)?;
        if triplets.is_empty() {
            return Err(TrainError::Dataset("training split has no positive pairs".into()));
        }
        let mut batch_losses = Vec::new();
        for batch in triplets.chunks(cfg.batch_size) {
            let idx: Vec<(usize, usize, usize)> = batch.iter().map(|t| (t.anchor, t.positive, t.negative)).collect();
            let (loss, grads) = batch_backward(&graphs, &idx, &params)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch: epoch + 1 });
            }
            batch_losses.push(loss);
            optimizer.step(&mut params, &grads);
        }
        let mean = batch_losses.iter().sum::<f64>() / batch_losses.len() as f64;
        log::info!("epoch {}: mean batch loss {mean:.6}", epoch + 1);
        losses.push(mean);
        if let Some(path) = &cfg.checkpoint {
            save_checkpoint(&params, path)?;
        }
        on_epoch(epoch + 1, &params, mean);
    }
    if params.tensors().iter().any(|t| !t.is_finite()) {
        return Err(TrainError::NonFiniteLoss { epoch: cfg.epochs });
    }
    Ok(TrainOutcome { params, losses })
}
