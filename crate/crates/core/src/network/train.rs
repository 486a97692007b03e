//! Minibatch ADAM training on cross-entropy.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::head::argmax;
use super::params::ParamTensors;
use crate::covariance::CovMatrix;
use crate::error::{Error, Result};

/// One labeled input. For the covariance network `features` is `m × F_0`
/// and `shift` the covariance it filters with; the bag-head baseline reads
/// `features` as one column per sample and ignores `shift`.
#[derive(Debug, Clone)]
pub struct Example {
    pub features: DMatrix<f64>,
    pub shift: Option<Arc<CovMatrix>>,
    pub label: usize,
}

/// A classifier whose loss gradients can be computed per example.
pub trait Objective {
    type Params: ParamTensors;

    fn init(&self, rng: &mut ChaCha8Rng) -> Self::Params;

    fn logits(&self, params: &Self::Params, ex: &Example) -> Result<DVector<f64>>;

    /// Cross-entropy loss, logits, and the gradient with respect to `params`.
    fn loss_grad(&self, params: &Self::Params, ex: &Example) -> Result<(f64, DVector<f64>, Self::Params)>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            epochs: 200,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.adam;
        if !(a.lr >= 0.0 && a.lr.is_finite()) {
            return Err(Error::InvalidInput(format!("learning rate must be finite and nonnegative, got {}", a.lr)));
        }
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || a.eps <= 0.0 {
            return Err(Error::InvalidInput("ADAM betas must lie in [0, 1) and eps must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidInput("epochs and batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// Mean per-example loss seen during the epoch.
    pub train_loss: f64,
    pub train_acc: f64,
    pub eval_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochStats>,
}

impl History {
    pub fn initial_loss(&self) -> Option<f64> {
        self.epochs.first().map(|e| e.train_loss)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }
}

#[derive(Debug, Clone)]
pub struct Trained<P> {
    pub params: P,
    pub history: History,
}

/// Initialize from `config.seed` and train.
pub fn train<O: Objective>(model: &O, config: &TrainConfig, train_set: &[Example], eval_set: Option<&[Example]>) -> Result<Trained<O::Params>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = model.init(&mut rng);
    fit(model, params, config, train_set, eval_set, &mut rng)
}

/// Train from given parameters; `rng` drives the minibatch shuffling.
pub fn fit<O: Objective>(
    model: &O,
    mut params: O::Params,
    config: &TrainConfig,
    train_set: &[Example],
    eval_set: Option<&[Example]>,
    rng: &mut ChaCha8Rng,
) -> Result<Trained<O::Params>> {
    config.validate()?;
    if train_set.is_empty() || eval_set.is_some_and(|e| e.is_empty()) {
        return Err(Error::EmptyDataset);
    }
    let mut state = AdamState::new(&params);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut losses = vec![0.0; train_set.len()];
    let mut correct = vec![false; train_set.len()];
    let mut history = History::default();

    for _ in 0..config.epochs {
        order.shuffle(rng);
        for batch in order.chunks(config.batch_size) {
            let mut grads = params.zeros_like();
            for &i in batch {
                let ex = &train_set[i];
                let (loss, logits, g) = model.loss_grad(&params, ex)?;
                losses[i] = loss;
                correct[i] = argmax(&logits) == ex.label;
                grads.add_scaled(&g, 1.0);
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut params, &grads, &mut state, &config.adam);
        }
        let n = train_set.len() as f64;
        let eval_acc = match eval_set {
            Some(e) => Some(evaluate(model, &params, e)?),
            None => None,
        };
        history.epochs.push(EpochStats {
            train_loss: losses.iter().sum::<f64>() / n,
            train_acc: correct.iter().filter(|c| **c).count() as f64 / n,
            eval_acc,
        });
    }
    Ok(Trained { params, history })
}

/// Classification accuracy.
pub fn evaluate<O: Objective>(model: &O, params: &O::Params, set: &[Example]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut hits = 0usize;
    for ex in set {
        if argmax(&model.logits(params, ex)?) == ex.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / set.len() as f64)
}

/// Mean cross-entropy over a set.
pub fn mean_loss<O: Objective>(model: &O, params: &O::Params, set: &[Example]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for ex in set {
        total += super::head::cross_entropy(&model.logits(params, ex)?, ex.label)?;
    }
    Ok(total / set.len() as f64)
}
